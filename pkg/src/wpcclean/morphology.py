"""Binary erosion, dilation and opening with square structuring elements.

For an element with origin ``o`` the erosion keeps pixel ``p`` iff
``A[p + b - o]`` is set for every ``b`` in the element, and the dilation sets
``p`` iff ``A[p - b + o]`` is set for some ``b``. Pixels off the canvas read
as background. A square element is separable, so both operators run as a
pass along x followed by a pass along y.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidSize
from .raster import BinaryImage

DEFAULT_N_MAX = 9


@dataclass(frozen=True)
class StructuringElement:
    n: int
    origin: tuple[int, int]

    def __post_init__(self):
        if self.n < 1:
            raise InvalidSize(f"structuring element size must be >= 1, got {self.n}")
        ox, oy = self.origin
        if not (0 <= ox < self.n and 0 <= oy < self.n):
            raise InvalidSize(f"origin {self.origin} outside a {self.n}x{self.n} element")

    @property
    def mask(self) -> np.ndarray:
        return np.ones((self.n, self.n), dtype=bool)

    def reflect(self) -> "StructuringElement":
        ox, oy = self.origin
        return StructuringElement(self.n, (self.n - 1 - ox, self.n - 1 - oy))


def square_se(n: int) -> StructuringElement:
    if n < 1:
        raise InvalidSize(f"structuring element size must be >= 1, got {n}")
    c = (n - 1) // 2
    return StructuringElement(n, (c, c))


def _shifted(a: np.ndarray, d: int, axis: int) -> np.ndarray:
    """``out[i] = a[i + d]`` along ``axis``, zero where ``i + d`` is off the canvas."""
    if d == 0:
        return a
    out = np.zeros_like(a)
    size = a.shape[axis]
    if abs(d) >= size:
        return out
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim
    if d > 0:
        src[axis] = slice(d, None)
        dst[axis] = slice(0, size - d)
    else:
        src[axis] = slice(0, size + d)
        dst[axis] = slice(-d, None)
    out[tuple(dst)] = a[tuple(src)]
    return out


def _erode_axis(a: np.ndarray, lo: int, hi: int, axis: int) -> np.ndarray:
    out = np.ones_like(a)
    for d in range(lo, hi + 1):
        out &= _shifted(a, d, axis)
    return out


def _dilate_axis(a: np.ndarray, lo: int, hi: int, axis: int) -> np.ndarray:
    out = np.zeros_like(a)
    for d in range(lo, hi + 1):
        out |= _shifted(a, -d, axis)
    return out


def erode_bits(bits: np.ndarray, se: StructuringElement) -> np.ndarray:
    ox, oy = se.origin
    rows = _erode_axis(bits, -ox, se.n - 1 - ox, axis=1)
    return _erode_axis(rows, -oy, se.n - 1 - oy, axis=0)


def dilate_bits(bits: np.ndarray, se: StructuringElement) -> np.ndarray:
    ox, oy = se.origin
    rows = _dilate_axis(bits, -ox, se.n - 1 - ox, axis=1)
    return _dilate_axis(rows, -oy, se.n - 1 - oy, axis=0)


def erode(A: BinaryImage, B: StructuringElement) -> BinaryImage:
    return BinaryImage(erode_bits(A.bits, B))


def dilate(A: BinaryImage, B: StructuringElement) -> BinaryImage:
    return BinaryImage(dilate_bits(A.bits, B))


def open(A: BinaryImage, B: StructuringElement) -> BinaryImage:  # noqa: A001
    """Erosion followed by dilation; removes features the element cannot fit inside."""
    return BinaryImage(dilate_bits(erode_bits(A.bits, B), B))


opening = open
