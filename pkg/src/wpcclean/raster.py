"""Binary images and the point <-> pixel mapping of the wind power curve.

Images are stored as boolean arrays indexed ``bits[y, x]``; ``x`` runs along
wind speed and ``y`` along power, growing downward, so higher power sits
nearer the top row.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from typing import BinaryIO

import numpy as np

from .errors import DegenerateRange, UnsupportedFormat, WpcError
from .scada_io import Dataset

DEFAULT_WIDTH = 432
DEFAULT_HEIGHT = 288
DEFAULT_STAMP = 2


@dataclass(frozen=True, eq=False)
class BinaryImage:
    bits: np.ndarray

    def __post_init__(self):
        bits = np.array(self.bits, dtype=bool, copy=True)
        if bits.ndim != 2 or bits.shape[0] < 1 or bits.shape[1] < 1:
            raise WpcError(f"image must be a non-empty 2-D grid, got shape {bits.shape}")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @classmethod
    def blank(cls, width: int, height: int) -> "BinaryImage":
        return cls(np.zeros((height, width), dtype=bool))

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.bits.shape

    def count(self) -> int:
        return int(np.count_nonzero(self.bits))

    def is_empty(self) -> bool:
        return not self.bits.any()

    def __getitem__(self, xy: tuple[int, int]) -> bool:
        x, y = xy
        return bool(self.bits[y, x])

    def __eq__(self, other) -> bool:
        if not isinstance(other, BinaryImage):
            return NotImplemented
        return self.bits.shape == other.bits.shape and bool(np.array_equal(self.bits, other.bits))

    def __le__(self, other: "BinaryImage") -> bool:
        """Subset test on foreground sets."""
        return not np.any(self.bits & ~other.bits)

    def __hash__(self):
        return hash((self.bits.shape, self.bits.tobytes()))

    def __repr__(self) -> str:
        return f"BinaryImage({self.width}x{self.height}, fg={self.count()})"


@dataclass(frozen=True)
class PixelCoord:
    x: int
    y: int


@dataclass(frozen=True)
class RasterTransform:
    """Affine map between (wind speed, power) and pixel coordinates.

    ``dx`` is pixels per m/s and ``dy`` pixels per kW; both are derived from
    the stored bounds at construction time.
    """

    v_min: float
    v_max: float
    P_min: float
    P_max: float
    x_min: int
    x_max: int
    y_min: int
    y_max: int
    width: int
    height: int
    stamp: int = DEFAULT_STAMP

    def __post_init__(self):
        if not self.v_max > self.v_min:
            raise DegenerateRange(f"wind speed range is degenerate: [{self.v_min}, {self.v_max}]")
        if not self.P_max > self.P_min:
            raise DegenerateRange(f"power range is degenerate: [{self.P_min}, {self.P_max}]")
        if self.stamp < 1:
            raise WpcError("stamp must be >= 1")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.v_max - self.v_min)

    @property
    def dy(self) -> float:
        return (self.y_max - self.y_min) / (self.P_max - self.P_min)

    @classmethod
    def from_ranges(
        cls,
        v_range: tuple[float, float],
        P_range: tuple[float, float],
        width: int = DEFAULT_WIDTH,
        height: int = DEFAULT_HEIGHT,
        stamp: int = DEFAULT_STAMP,
    ) -> "RasterTransform":
        if width < stamp or height < stamp:
            raise WpcError(f"canvas {width}x{height} cannot hold a {stamp}x{stamp} stamp")
        return cls(
            v_min=float(v_range[0]),
            v_max=float(v_range[1]),
            P_min=float(P_range[0]),
            P_max=float(P_range[1]),
            x_min=0,
            x_max=width - stamp,
            y_min=0,
            y_max=height - stamp,
            width=width,
            height=height,
            stamp=stamp,
        )

    def map_arrays(self, v: np.ndarray, P: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorised :func:`map_point`; returns integer column and row arrays."""
        x = self.x_min + (np.asarray(v, dtype=np.float64) - self.v_min) * self.dx
        y = self.y_max - (np.asarray(P, dtype=np.float64) - self.P_min) * self.dy
        x = np.clip(_round_half_away(x), 0, self.width - 1).astype(np.int64)
        y = np.clip(_round_half_away(y), 0, self.height - 1).astype(np.int64)
        return x, y


def _round_half_away(a: np.ndarray) -> np.ndarray:
    return np.sign(a) * np.floor(np.abs(a) + 0.5)


def build_transform(
    dataset: Dataset,
    width: int = DEFAULT_WIDTH,
    height: int = DEFAULT_HEIGHT,
    stamp: int = DEFAULT_STAMP,
) -> RasterTransform:
    """Transform spanning the dataset's value ranges on a ``width`` x ``height`` canvas.

    Pixel bounds are ``[0, width - stamp] x [0, height - stamp]`` so the stamp
    of an extreme point still fits.
    """
    if len(dataset) == 0:
        raise WpcError("cannot build a transform for an empty dataset")
    return RasterTransform.from_ranges(
        (dataset.v.min(), dataset.v.max()),
        (dataset.P.min(), dataset.P.max()),
        width=width,
        height=height,
        stamp=stamp,
    )


def map_point(point: tuple[float, float], t: RasterTransform) -> PixelCoord:
    """Pixel of a (wind speed, power) pair; out-of-range values are clamped to the canvas."""
    x, y = t.map_arrays(np.array([point[0]]), np.array([point[1]]))
    return PixelCoord(int(x[0]), int(y[0]))


def stamp_arrays(x: np.ndarray, y: np.ndarray, t: RasterTransform) -> np.ndarray:
    """Boolean canvas with a ``stamp`` x ``stamp`` block set at every anchor, cropped to the canvas."""
    bits = np.zeros((t.height, t.width), dtype=bool)
    for oy in range(t.stamp):
        yy = y + oy
        for ox in range(t.stamp):
            xx = x + ox
            ok = (xx < t.width) & (yy < t.height)
            bits[yy[ok], xx[ok]] = True
    return bits


def rasterize(dataset: Dataset, t: RasterTransform) -> BinaryImage:
    x, y = t.map_arrays(dataset.v, dataset.P)
    return BinaryImage(stamp_arrays(x, y, t))


def stamp_hits(region: np.ndarray, x: np.ndarray, y: np.ndarray, stamp: int) -> np.ndarray:
    """True where the stamp block anchored at (x, y) touches any pixel of ``region``."""
    h, w = region.shape
    # grow region up/left by stamp-1 so a single lookup answers "any pixel in the block"
    grown = np.zeros((h + stamp, w + stamp), dtype=bool)
    grown[:h, :w] = region
    acc = np.zeros_like(grown)
    for oy in range(stamp):
        for ox in range(stamp):
            acc[: h + stamp - oy, : w + stamp - ox] |= grown[oy:, ox:]
    return acc[y, x]


def encode_pgm(img: BinaryImage) -> bytes:
    payload = np.where(img.bits, 0, 255).astype(np.uint8)
    return f"P5\n{img.width} {img.height}\n255\n".encode("ascii") + payload.tobytes()


def _png_chunk(kind: bytes, data: bytes) -> bytes:
    return struct.pack(">I", len(data)) + kind + data + struct.pack(">I", zlib.crc32(data, zlib.crc32(kind)))


def encode_png(pixels: np.ndarray) -> bytes:
    """PNG from an 8-bit array shaped (h, w) for grey or (h, w, 3) for RGB."""
    pixels = np.ascontiguousarray(pixels, dtype=np.uint8)
    if pixels.ndim == 2:
        color_type, channels = 0, 1
    elif pixels.ndim == 3 and pixels.shape[2] == 3:
        color_type, channels = 2, 3
    else:
        raise UnsupportedFormat(f"cannot encode array of shape {pixels.shape} as PNG")
    h, w = pixels.shape[:2]
    rows = pixels.reshape(h, w * channels)
    raw = np.hstack([np.zeros((h, 1), dtype=np.uint8), rows]).tobytes()
    ihdr = struct.pack(">IIBBBBB", w, h, 8, color_type, 0, 0, 0)
    return (
        b"\x89PNG\r\n\x1a\n"
        + _png_chunk(b"IHDR", ihdr)
        + _png_chunk(b"IDAT", zlib.compress(raw, 9))
        + _png_chunk(b"IEND", b"")
    )


def write_image(img: BinaryImage, sink: BinaryIO, format: str = "PGM") -> None:
    """Write foreground as black (0) on white (255)."""
    fmt = format.upper()
    if fmt == "PGM":
        sink.write(encode_pgm(img))
    elif fmt == "PNG":
        sink.write(encode_png(np.where(img.bits, 0, 255).astype(np.uint8)))
    else:
        raise UnsupportedFormat(f"unsupported image format {format!r}")
