"""Connected components, outer border following and region filling.

Foreground is 8-connected and background 4-connected throughout. Borders
are traced with the outer-border step of Suzuki & Abe's border following,
restricted to the one border that is needed (no hierarchy).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import EmptyImage, OutOfCanvas, WpcError
from .raster import BinaryImage, PixelCoord

# clockwise on screen (y grows downward), starting east
_DIRS = ((0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1))
_DIR_INDEX = {d: k for k, d in enumerate(_DIRS)}
_WEST = 4

_STRUCTURE = {
    4: ndimage.generate_binary_structure(2, 1),
    8: ndimage.generate_binary_structure(2, 2),
}


@dataclass(frozen=True, eq=False)
class Contour:
    """Closed outer border; ``xy`` holds (x, y) rows in trace order."""

    xy: np.ndarray
    area: int

    @property
    def points(self) -> list[PixelCoord]:
        return [PixelCoord(int(x), int(y)) for x, y in self.xy]

    def __len__(self) -> int:
        return len(self.xy)

    def point_set(self) -> set[tuple[int, int]]:
        return {(int(x), int(y)) for x, y in self.xy}


@dataclass(frozen=True)
class RegionMask:
    image: BinaryImage

    @property
    def area(self) -> int:
        return self.image.count()

    @property
    def bits(self) -> np.ndarray:
        return self.image.bits


def connected_components(img: BinaryImage, connectivity: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Label grid (0 = background, components numbered from 1) and component sizes.

    ``sizes[k - 1]`` is the pixel count of component ``k``.
    """
    if connectivity not in _STRUCTURE:
        raise WpcError(f"connectivity must be 4 or 8, got {connectivity}")
    labels, count = ndimage.label(img.bits, structure=_STRUCTURE[connectivity])
    sizes = np.bincount(labels.ravel(), minlength=count + 1)[1:]
    return labels, sizes


def trace_outer_border(bits: np.ndarray, start: tuple[int, int]) -> np.ndarray:
    """Trace the outer border through ``start`` = (row, col).

    ``start`` must be a foreground pixel whose west neighbour is background,
    e.g. the first pixel of a component in raster order. Returns (x, y) rows.
    """
    h, w = bits.shape

    def fg(r: int, c: int) -> bool:
        return 0 <= r < h and 0 <= c < w and bool(bits[r, c])

    i, j = start
    first = None
    for k in range(8):
        d = _DIRS[(_WEST + k) % 8]
        if fg(i + d[0], j + d[1]):
            first = (i + d[0], j + d[1])
            break
    if first is None:
        return np.array([[j, i]], dtype=np.int64)

    trace = []
    prev, cur = first, (i, j)
    while True:
        back = _DIR_INDEX[(prev[0] - cur[0], prev[1] - cur[1])]
        nxt = None
        for k in range(1, 9):
            d = _DIRS[(back - k) % 8]
            cand = (cur[0] + d[0], cur[1] + d[1])
            if fg(*cand):
                nxt = cand
                break
        trace.append((cur[1], cur[0]))
        if nxt == (i, j) and cur == first:
            break
        prev, cur = cur, nxt
    return np.array(trace, dtype=np.int64)


def _fill_bits(xy: np.ndarray, width: int, height: int) -> np.ndarray:
    mask = np.zeros((height, width), dtype=bool)
    mask[xy[:, 1], xy[:, 0]] = True
    if len(xy) < 3:
        return mask
    a = xy
    b = np.roll(xy, -1, axis=0)
    steps = a[:, 1] != b[:, 1]
    a, b = a[steps], b[steps]
    # a crossing of the line y + 0.5 by an edge spanning rows y..y+1 sits at the upper endpoint
    upper = np.where((a[:, 1] < b[:, 1])[:, None], a, b)
    order = np.lexsort((upper[:, 0], upper[:, 1]))
    upper = upper[order]
    if len(upper) % 2:
        raise WpcError("contour is not closed")
    left, right = upper[0::2], upper[1::2]
    diff = np.zeros((height, width + 1), dtype=np.int32)
    np.add.at(diff, (left[:, 1], left[:, 0]), 1)
    np.add.at(diff, (right[:, 1], right[:, 0] + 1), -1)
    mask |= np.cumsum(diff, axis=1)[:, :width] > 0
    return mask


def fill_region(c: Contour, width: int, height: int) -> RegionMask:
    """Even-odd scanline fill of the closed border, border pixels included."""
    xy = c.xy
    if xy.size and (xy[:, 0].max() >= width or xy[:, 1].max() >= height or xy.min() < 0):
        raise OutOfCanvas(f"contour does not fit a {width}x{height} canvas")
    return RegionMask(BinaryImage(_fill_bits(xy, width, height)))


def component_starts(labels: np.ndarray, count: int) -> np.ndarray:
    """(row, col) of each component's first pixel in raster order, indexed by label - 1."""
    flat = labels.ravel()
    _, first = np.unique(flat, return_index=True)
    first = first[1:] if flat[first[0]] == 0 else first
    rows, cols = np.divmod(first[:count], labels.shape[1])
    return np.stack([rows, cols], axis=1)


def max_contour(img: BinaryImage) -> Contour:
    """Outer border of the component with the largest filled area.

    Ties go to the component whose first pixel comes earliest in raster order.
    """
    labels, sizes = connected_components(img, 8)
    if sizes.size == 0:
        raise EmptyImage()
    starts = component_starts(labels, len(sizes))
    raster_pos = starts[:, 0] * img.width + starts[:, 1]
    # the bounding box caps the filled area, so components can be skipped once it is too small
    boxes = ndimage.find_objects(labels)
    box_area = np.array([(b[0].stop - b[0].start) * (b[1].stop - b[1].start) for b in boxes])
    order = np.lexsort((raster_pos, -box_area))
    best: Contour | None = None
    best_pos = None
    for k in order:
        if best is not None and box_area[k] < best.area:
            break
        xy = trace_outer_border(img.bits, (int(starts[k, 0]), int(starts[k, 1])))
        area = int(_fill_bits(xy, img.width, img.height).sum())
        if best is None or area > best.area or (area == best.area and raster_pos[k] < best_pos):
            best, best_pos = Contour(xy, area), raster_pos[k]
    return best


def filled_max_region(img: BinaryImage) -> RegionMask:
    return fill_region(max_contour(img), img.width, img.height)


def contains(mask: RegionMask, p: PixelCoord) -> bool:
    if not (0 <= p.x < mask.image.width and 0 <= p.y < mask.image.height):
        raise OutOfCanvas(f"pixel ({p.x}, {p.y}) outside a {mask.image.width}x{mask.image.height} canvas")
    return bool(mask.image.bits[p.y, p.x])
