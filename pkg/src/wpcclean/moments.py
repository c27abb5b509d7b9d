"""Central and normalised moments, Hu invariants and the shape dissimilarity.

Coordinates are pixel column ``x`` and row ``y``; the 0- vs 1-based
convention is irrelevant because only central moments are used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import BadOrder, EmptyImage
from .raster import BinaryImage

EPS = 1e-12


@dataclass(frozen=True)
class HuVector:
    I: tuple[float, ...]
    m: tuple[float, ...]

    @classmethod
    def from_invariants(cls, I: Sequence[float], log: Callable[[float], float] = math.log) -> "HuVector":
        I = tuple(float(x) for x in I)
        return cls(I, tuple(transfer(I, log=log)))


def _coords(img: BinaryImage) -> tuple[np.ndarray, np.ndarray]:
    ys, xs = np.nonzero(img.bits)
    if xs.size == 0:
        raise EmptyImage()
    return xs.astype(np.float64), ys.astype(np.float64)


def _centered(img: BinaryImage) -> tuple[np.ndarray, np.ndarray]:
    xs, ys = _coords(img)
    # anchor at the bounding box corner first so integer translations give bit-identical sums
    xs -= xs.min()
    ys -= ys.min()
    return xs - xs.mean(), ys - ys.mean()


def central_moment(img: BinaryImage, p: int, q: int) -> float:
    dx, dy = _centered(img)
    return float(np.sum(dx**p * dy**q))


def normalized_moment(img: BinaryImage, p: int, q: int) -> float:
    if p + q < 2:
        raise BadOrder(f"normalised moments need p + q >= 2, got {p}+{q}")
    dx, dy = _centered(img)
    mu00 = float(dx.size)
    return float(np.sum(dx**p * dy**q)) / mu00 ** (1 + (p + q) / 2)


def normalized_moments(img: BinaryImage) -> dict[tuple[int, int], float]:
    """All second and third order normalised central moments."""
    dx, dy = _centered(img)
    mu00 = float(dx.size)
    out = {}
    for p, q in ((2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)):
        out[(p, q)] = float(np.sum(dx**p * dy**q)) / mu00 ** (1 + (p + q) / 2)
    return out


def hu_invariants(eta: dict[tuple[int, int], float]) -> tuple[float, ...]:
    n20, n02, n11 = eta[(2, 0)], eta[(0, 2)], eta[(1, 1)]
    n30, n03, n21, n12 = eta[(3, 0)], eta[(0, 3)], eta[(2, 1)], eta[(1, 2)]
    a = n30 + n12
    b = n21 + n03
    I1 = n20 + n02
    I2 = (n20 - n02) ** 2 + 4 * n11**2
    I3 = (n30 - 3 * n12) ** 2 + (3 * n21 - n03) ** 2
    I4 = a**2 + b**2
    I5 = (n30 - 3 * n12) * a * (a**2 - 3 * b**2) + (3 * n21 - n03) * b * (3 * a**2 - b**2)
    I6 = (n20 - n02) * (a**2 - b**2) + 4 * n11 * a * b
    I7 = (3 * n21 - n03) * a * (a**2 - 3 * b**2) - (n30 - 3 * n12) * b * (3 * a**2 - b**2)
    return (I1, I2, I3, I4, I5, I6, I7)


def hu_set(img: BinaryImage, log: Callable[[float], float] = math.log) -> HuVector:
    return HuVector.from_invariants(hu_invariants(normalized_moments(img)), log=log)


def transfer(I: Sequence[float], log: Callable[[float], float] = math.log) -> list[float]:
    """Signed log magnitude, ``sign(I) * log|I|``; magnitudes below ``EPS`` map to 0."""
    out = []
    for value in I:
        if abs(value) < EPS:
            out.append(0.0)
        else:
            out.append(math.copysign(1.0, value) * log(abs(value)))
    return out


def dissimilarity(a: HuVector, b: HuVector) -> float:
    """Largest relative deviation of ``b`` from ``a`` over the transferred moments.

    Not symmetric: the denominator comes from ``a``. Indices where ``|m_a|`` is
    below ``EPS`` are skipped; if every index is skipped the result is 0 for
    equal vectors and ``inf`` otherwise.
    """
    worst = None
    for ma, mb in zip(a.m, b.m):
        if abs(ma) < EPS:
            continue
        r = abs(ma - mb) / abs(ma)
        worst = r if worst is None else max(worst, r)
    if worst is None:
        return 0.0 if tuple(a.m) == tuple(b.m) else math.inf
    return worst
