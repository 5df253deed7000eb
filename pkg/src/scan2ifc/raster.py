"""Density rasters, binary masks, morphology, and contour tracing.

Cells are half-open: cell i covers [origin + i*cell, origin + (i+1)*cell).
Grid origins snap down to a cell-size multiple so identical geometry always
lands on the same lattice.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .geom2d import Polyline2D, signed_area


@dataclass
class Histogram1D:
    origin: float
    bin_size: float
    counts: np.ndarray

    def __post_init__(self):
        if self.bin_size <= 0:
            raise ValueError("bin_size must be > 0")
        self.counts = np.asarray(self.counts, dtype=np.int64)

    def __len__(self):
        return len(self.counts)

    def bin_of(self, value: float) -> int:
        return int(math.floor((value - self.origin) / self.bin_size))

    def bin_left(self, i: int) -> float:
        return self.origin + i * self.bin_size

    def bin_center(self, i: int) -> float:
        return self.origin + (i + 0.5) * self.bin_size

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def histogram_1d(values, bin_size: float) -> Histogram1D:
    """Count values into fixed-width bins; origin snaps down to a bin multiple."""
    if bin_size <= 0:
        raise ValueError("bin_size must be > 0")
    values = np.asarray(values, dtype=float).ravel()
    if len(values) == 0:
        return Histogram1D(0.0, bin_size, np.zeros(0, dtype=np.int64))
    origin = math.floor(values.min() / bin_size) * bin_size
    idx = np.floor((values - origin) / bin_size).astype(np.int64)
    idx = np.maximum(idx, 0)
    counts = np.bincount(idx)
    return Histogram1D(origin, bin_size, counts)


def histogram_1d_range(values, bin_size: float, lo: float, hi: float) -> Histogram1D:
    """Histogram over an explicit [lo, hi) domain; values outside are clipped in."""
    if bin_size <= 0 or hi <= lo:
        raise ValueError("bad histogram range")
    values = np.asarray(values, dtype=float).ravel()
    nbins = max(1, int(math.ceil((hi - lo) / bin_size - 1e-12)))
    if len(values) == 0:
        return Histogram1D(lo, bin_size, np.zeros(nbins, dtype=np.int64))
    idx = np.floor((values - lo) / bin_size).astype(np.int64)
    idx = np.clip(idx, 0, nbins - 1)
    counts = np.bincount(idx, minlength=nbins)
    return Histogram1D(lo, bin_size, counts)


@dataclass
class DensityGrid:
    origin: tuple
    cell_size: float
    counts: np.ndarray  # (height, width), row iy / col ix

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)

    @property
    def width(self) -> int:
        return self.counts.shape[1]

    @property
    def height(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def world_to_cell(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.floor((pts - np.asarray(self.origin)) / self.cell_size).astype(np.int64)

    def cell_center(self, ix, iy) -> np.ndarray:
        ox, oy = self.origin
        return np.array([ox + (np.asarray(ix) + 0.5) * self.cell_size,
                         oy + (np.asarray(iy) + 0.5) * self.cell_size]).T


@dataclass
class BinaryMask:
    origin: tuple
    cell_size: float
    bits: np.ndarray  # (height, width) bool

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=bool)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]


def histogram_2d(points, cell_size: float) -> DensityGrid:
    """Rasterize planar points into per-cell counts; total count is conserved."""
    if cell_size <= 0:
        raise ValueError("cell_size must be > 0")
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        return DensityGrid((0.0, 0.0), cell_size, np.zeros((0, 0), dtype=np.int64))
    ox = math.floor(pts[:, 0].min() / cell_size) * cell_size
    oy = math.floor(pts[:, 1].min() / cell_size) * cell_size
    ix = np.floor((pts[:, 0] - ox) / cell_size).astype(np.int64)
    iy = np.floor((pts[:, 1] - oy) / cell_size).astype(np.int64)
    ix = np.maximum(ix, 0)
    iy = np.maximum(iy, 0)
    w = int(ix.max()) + 1
    h = int(iy.max()) + 1
    flat = np.bincount(iy * w + ix, minlength=w * h)
    return DensityGrid((ox, oy), cell_size, flat.reshape(h, w))


def binarize(grid: DensityGrid, threshold: float) -> BinaryMask:
    """Set a bit wherever count > threshold * max(counts)."""
    if not 0 <= threshold <= 1:
        raise ValueError("threshold must be in [0, 1]")
    if grid.counts.size == 0:
        return BinaryMask(grid.origin, grid.cell_size, np.zeros_like(grid.counts, dtype=bool))
    mx = int(grid.counts.max())
    return BinaryMask(grid.origin, grid.cell_size, grid.counts > threshold * mx)


def _box_count(bits: np.ndarray, k: int) -> np.ndarray:
    """Set-cell count in the (2k+1)^2 window around each cell, clamped to the grid."""
    h, w = bits.shape
    ii = np.zeros((h + 1, w + 1), dtype=np.int64)
    np.cumsum(np.cumsum(bits.astype(np.int64), axis=0), axis=1, out=ii[1:, 1:])
    r = np.arange(h)
    c = np.arange(w)
    r0 = np.maximum(r - k, 0)
    r1 = np.minimum(r + k + 1, h)
    c0 = np.maximum(c - k, 0)
    c1 = np.minimum(c + k + 1, w)
    return ii[np.ix_(r1, c1)] - ii[np.ix_(r0, c1)] - ii[np.ix_(r1, c0)] + ii[np.ix_(r0, c0)]


def _radius_to_cells(radius: float, cell_size: float) -> int:
    # round-half-up so radius == cell/2 already reaches the neighbor ring
    return int(math.floor(radius / cell_size + 0.5))


def dilate_cells(mask: BinaryMask, k: int) -> BinaryMask:
    if k <= 0 or mask.bits.size == 0:
        return BinaryMask(mask.origin, mask.cell_size, mask.bits.copy())
    return BinaryMask(mask.origin, mask.cell_size, _box_count(mask.bits, k) > 0)


def erode_cells(mask: BinaryMask, k: int) -> BinaryMask:
    if k <= 0 or mask.bits.size == 0:
        return BinaryMask(mask.origin, mask.cell_size, mask.bits.copy())
    full = (2 * k + 1) ** 2
    return BinaryMask(mask.origin, mask.cell_size, _box_count(mask.bits, k) == full)


def dilate(mask: BinaryMask, radius: float) -> BinaryMask:
    """Minkowski dilation with a filled square of half-width round(radius/cell)."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    return dilate_cells(mask, _radius_to_cells(radius, mask.cell_size))


def erode(mask: BinaryMask, radius: float) -> BinaryMask:
    """Minkowski erosion; cells outside the grid count as background."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    return erode_cells(mask, _radius_to_cells(radius, mask.cell_size))


def close_cells(mask: BinaryMask, k: int) -> BinaryMask:
    return erode_cells(dilate_cells(mask, k), k)


def pad_mask(mask: BinaryMask, cells: int) -> BinaryMask:
    """Grow the lattice by `cells` background cells on every side."""
    if cells <= 0:
        return BinaryMask(mask.origin, mask.cell_size, mask.bits.copy())
    h, w = mask.bits.shape
    bits = np.zeros((h + 2 * cells, w + 2 * cells), dtype=bool)
    bits[cells : cells + h, cells : cells + w] = mask.bits
    ox, oy = mask.origin
    c = mask.cell_size
    return BinaryMask((ox - cells * c, oy - cells * c), c, bits)


# Crack-following direction conventions: x right, y up, region kept on the
# left, so outer contours come out counter-clockwise (positive area).
_LEFT = {(1, 0): (0, 1), (0, 1): (-1, 0), (-1, 0): (0, -1), (0, -1): (1, 0)}
_RIGHT = {v: k for k, v in _LEFT.items()}
# ahead-left / ahead-right cell offsets relative to the corner, per heading
_AHEAD = {
    (1, 0): ((0, 0), (0, -1)),
    (0, 1): ((-1, 0), (0, 0)),
    (-1, 0): ((-1, -1), (-1, 0)),
    (0, -1): ((0, -1), (-1, -1)),
}


def _trace_outer(labels: np.ndarray, comp: int, seed_ix: int, seed_iy: int) -> np.ndarray:
    """Outer crack boundary of one 8-connected component, as corner-lattice points."""
    h, w = labels.shape

    def fg(cx, cy):
        return 0 <= cx < w and 0 <= cy < h and labels[cy, cx] == comp

    start = (seed_ix, seed_iy, 1, 0)  # bottom-left corner of seed, heading +x
    corners = []
    ci, cj, dx, dy = start
    while True:
        corners.append((ci, cj))
        ci, cj = ci + dx, cj + dy
        (alx, aly), (arx, ary) = _AHEAD[(dx, dy)]
        ahead_left = fg(ci + alx, cj + aly)
        ahead_right = fg(ci + arx, cj + ary)
        if ahead_right:
            dx, dy = _RIGHT[(dx, dy)]
        elif ahead_left:
            pass  # straight
        else:
            dx, dy = _LEFT[(dx, dy)]
        if (ci, cj, dx, dy) == start:
            break
    return np.array(corners, dtype=float)


def trace_contours(mask: BinaryMask) -> list[Polyline2D]:
    """Outer borders of 8-connected foreground components, in world meters.

    Vertices sit at the midpoints of the boundary cell edges. Contours are
    closed and ordered by descending enclosed area.
    """
    bits = mask.bits
    if bits.size == 0 or not bits.any():
        return []
    labels, ncomp = ndimage.label(bits, structure=np.ones((3, 3), dtype=int))
    ox, oy = mask.origin
    c = mask.cell_size
    contours = []
    objects = ndimage.find_objects(labels)
    for comp in range(1, ncomp + 1):
        sl = objects[comp - 1]
        sub = labels[sl] == comp
        ys, xs = np.nonzero(sub)
        # first cell in (row, col) order has minimal iy, then ix
        seed_iy = int(ys[0]) + sl[0].start
        seed_ix = int(xs[0]) + sl[1].start
        corners = _trace_outer(labels, comp, seed_ix, seed_iy)
        mids = (corners + np.roll(corners, -1, axis=0)) / 2.0
        world = np.empty_like(mids)
        world[:, 0] = ox + mids[:, 0] * c
        world[:, 1] = oy + mids[:, 1] * c
        contours.append(Polyline2D(world, closed=True))
    contours.sort(key=lambda p: (-abs(signed_area(p.vertices)), tuple(p.vertices[0])))
    return contours


def contour_cells(mask: BinaryMask, contour: Polyline2D) -> set:
    """Foreground cells owning the traversed cracks of a traced contour.

    Each contour vertex is the midpoint of a cell edge; the owning cell is
    whichever side of that edge is set.
    """
    ox, oy = mask.origin
    c = mask.cell_size
    cells = set()
    for x, y in contour.vertices:
        gx, gy = (x - ox) / c, (y - oy) / c
        candidates = (
            (math.floor(gx + 0.25), math.floor(gy + 0.25)),
            (math.floor(gx - 0.25), math.floor(gy + 0.25)),
            (math.floor(gx + 0.25), math.floor(gy - 0.25)),
            (math.floor(gx - 0.25), math.floor(gy - 0.25)),
        )
        for cx, cy in candidates:
            if 0 <= cx < mask.width and 0 <= cy < mask.height and mask.bits[cy, cx]:
                cells.add((cx, cy))
    return cells
