"""Wall detection: slice extraction, surface segments, pairing, axis snapping.

Walls are recovered per storey from a high-z horizontal slice. The slice is
rasterized to a density grid; thresholding and a morphological close turn
wall surfaces into solid strips whose contours, once simplified and merged,
give one segment per visible wall face. Opposite faces pair into volumetric
walls; faces scanned from one side only become exterior walls with a virtual
back face.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import EmptySliceError
from .geom2d import Segment2D, explode_segments, line_intersection, merge_collinear, simplify
from .raster import binarize, close_cells, histogram_2d, pad_mask, trace_contours
from .slabs import Storey


class SurfaceSide(Enum):
    REAL = "real"
    VIRTUAL = "virtual"


@dataclass
class WallSurface:
    segment: Segment2D
    side: SurfaceSide = SurfaceSide.REAL


@dataclass
class Wall:
    axis_start: np.ndarray
    axis_end: np.ndarray
    thickness: float
    height: float
    storey_index: int
    surfaces: tuple
    exterior: bool = False

    def __post_init__(self):
        self.axis_start = np.asarray(self.axis_start, dtype=float).reshape(2)
        self.axis_end = np.asarray(self.axis_end, dtype=float).reshape(2)

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.axis_end - self.axis_start))

    @property
    def direction(self) -> np.ndarray:
        return (self.axis_end - self.axis_start) / self.length

    @property
    def midpoint(self) -> np.ndarray:
        return (self.axis_start + self.axis_end) / 2.0


def extract_slice(storey: Storey, z_bounds: tuple) -> np.ndarray:
    """Plan coordinates of storey points inside a height-fraction window."""
    lo, hi = z_bounds
    if not (0 <= lo < hi <= 1):
        raise ValueError("z_bounds must satisfy 0 <= lo < hi <= 1")
    z = storey.points.points[:, 2]
    z0 = storey.z_floor_top + lo * storey.height
    z1 = storey.z_floor_top + hi * storey.height
    sel = (z >= z0) & (z <= z1)
    if not sel.any():
        raise EmptySliceError()
    return storey.points.points[sel, :2]


def detect_surfaces(
    points2d: np.ndarray,
    cell_size: float,
    threshold: float,
    kernel_cells: int,
    epsilon: float,
    min_wall_length: float,
    angle_tol: float = 3.0,
    merge_gap: float | None = None,
) -> list[WallSurface]:
    """Wall-face segments from a plan-view slice.

    merge_gap bounds both the lateral offset and the endpoint gap when fusing
    collinear contour fragments; it defaults to max(6 * cell_size, epsilon),
    wide enough to fuse the two sides of one raster strip (which widens into
    a wedge where oblique walls meet) but far below any real wall spacing.
    """
    points2d = np.asarray(points2d, dtype=float).reshape(-1, 2)
    if len(points2d) == 0:
        return []
    if merge_gap is None:
        merge_gap = max(6.0 * cell_size, epsilon)
    grid = histogram_2d(points2d, cell_size)
    mask = binarize(grid, threshold)
    k = max(0, int(kernel_cells) // 2)
    mask = close_cells(pad_mask(mask, k + 1), k)
    segments = []
    for contour in trace_contours(mask):
        simplified = simplify(contour, epsilon)
        segments.extend(explode_segments(simplified, min_length=cell_size * 0.5))
    merged = merge_collinear(segments, angle_tol, merge_gap)
    return [WallSurface(s) for s in merged if s.length >= min_wall_length]


def _angle_deg(d1: np.ndarray, d2: np.ndarray) -> float:
    c = abs(float(np.clip(d1 @ d2, -1.0, 1.0)))
    return float(np.degrees(np.arccos(c)))


def pair_surfaces(
    surfaces: list[WallSurface],
    min_t: float,
    max_t: float,
    min_overlap_fraction: float,
    exterior_t: float,
    storey_index: int,
    height: float,
    angle_tol: float = 3.0,
    slice_points: np.ndarray | None = None,
    side_clear: float = 0.02,
    side_reach: float = 1.0,
) -> list[Wall]:
    """Pair opposite wall faces into volumetric walls.

    Two faces pair when nearly parallel, offset within [min_t, max_t], and
    overlapping at least min_overlap_fraction of the shorter face; pairing is
    greedy by descending overlap so permuting the input cannot change the
    result. Unpaired faces become exterior walls of thickness exterior_t with
    a virtual face on the side showing fewer scan points.
    """
    if not (0 < min_t < max_t):
        raise ValueError("need 0 < min_t < max_t")
    surfs = sorted(surfaces, key=lambda s: (tuple(s.segment.a), tuple(s.segment.b)))
    cands = []
    for i in range(len(surfs)):
        for j in range(i + 1, len(surfs)):
            s1, s2 = surfs[i].segment, surfs[j].segment
            if s2.length > s1.length:
                s1, s2 = s2, s1
            if _angle_deg(s1.direction, s2.direction) >= angle_tol:
                continue
            d = s1.direction
            n = np.array([-d[1], d[0]])
            off = float(((s2.midpoint - s1.a) @ n))
            if not (min_t <= abs(off) <= max_t):
                continue
            t1, t2 = float((s2.a - s1.a) @ d), float((s2.b - s1.a) @ d)
            lo2, hi2 = min(t1, t2), max(t1, t2)
            overlap = min(s1.length, hi2) - max(0.0, lo2)
            if overlap < min_overlap_fraction * min(s1.length, s2.length) or overlap <= 0:
                continue
            cands.append((overlap, i, j))
    cands.sort(key=lambda c: (-c[0], c[1], c[2]))

    used = [False] * len(surfs)
    walls = []
    for overlap, i, j in cands:
        if used[i] or used[j]:
            continue
        used[i] = used[j] = True
        s1, s2 = surfs[i].segment, surfs[j].segment
        if s2.length > s1.length:
            s1, s2 = s2, s1
        d = s1.direction
        n = np.array([-d[1], d[0]])
        off = float((s2.midpoint - s1.a) @ n)
        base = s1.a + (off / 2.0) * n
        ts = [0.0, s1.length, float((s2.a - base) @ d), float((s2.b - base) @ d)]
        a = base + min(ts) * d
        b = base + max(ts) * d
        a, b = (a, b) if tuple(a) <= tuple(b) else (b, a)
        walls.append(
            Wall(a, b, abs(off), height, storey_index, (surfs[i], surfs[j]), exterior=False)
        )

    for i, ws in enumerate(surfs):
        if used[i]:
            continue
        seg = ws.segment
        d = seg.direction
        n = np.array([-d[1], d[0]])
        sign = _exterior_side(seg, slice_points, side_clear, side_reach)
        virt_seg = Segment2D(seg.a + sign * exterior_t * n, seg.b + sign * exterior_t * n)
        axis_a = seg.a + sign * (exterior_t / 2.0) * n
        axis_b = seg.b + sign * (exterior_t / 2.0) * n
        a, b = (axis_a, axis_b) if tuple(axis_a) <= tuple(axis_b) else (axis_b, axis_a)
        walls.append(
            Wall(
                a,
                b,
                exterior_t,
                height,
                storey_index,
                (ws, WallSurface(virt_seg, SurfaceSide.VIRTUAL)),
                exterior=True,
            )
        )
    walls.sort(key=lambda w: (tuple(w.axis_start), tuple(w.axis_end)))
    return walls


def _exterior_side(seg: Segment2D, slice_points, side_clear: float, side_reach: float) -> float:
    """+1/-1 sign of the face normal pointing toward the building exterior.

    The exterior is the side with fewer slice points in a band beside the
    face (facades are typically unscanned); without points the +normal side
    is assumed.
    """
    if slice_points is None or len(slice_points) == 0:
        return 1.0
    pts = np.asarray(slice_points, dtype=float)
    d = seg.direction
    n = np.array([-d[1], d[0]])
    rel = pts - seg.a
    t = rel @ d
    within = (t >= 0) & (t <= seg.length)
    perp = rel @ n
    pos = int(np.count_nonzero(within & (perp > side_clear) & (perp <= side_reach)))
    neg = int(np.count_nonzero(within & (perp < -side_clear) & (perp >= -side_reach)))
    return 1.0 if pos <= neg else -1.0


def snap_axes(walls: list[Wall], max_wall_thickness: float) -> list[Wall]:
    """Pull nearby axis endpoints onto neighboring axes so junctions coincide.

    An endpoint moves to the intersection of its own axis line with another
    wall's axis line whenever that intersection lies within
    max_wall_thickness / 2. Among eligible walls the longest acts as the
    reference (at noisy multi-way junctions the pairwise intersections
    disagree by a few raster cells, and the longest axis is the most reliable
    line). Near-parallel walls never snap onto each other: the intersection
    of two almost-collinear detected axes is numerically meaningless. Axis
    directions never change. Idempotent.
    """
    thr = max_wall_thickness / 2.0
    lines = [(w.axis_start.copy(), w.direction.copy()) for w in walls]
    out = []
    for i, w in enumerate(walls):
        new_pts = []
        for e in (w.axis_start, w.axis_end):
            best = None
            for j in range(len(walls)):
                if j == i:
                    continue
                if _angle_deg(lines[i][1], lines[j][1]) < 5.0:
                    continue
                x = line_intersection(lines[i][0], lines[i][1], lines[j][0], lines[j][1])
                if x is None:
                    continue
                dist = float(np.linalg.norm(e - x))
                if dist > thr:
                    continue
                key = (-walls[j].length, dist, j)
                if best is None or key < best[0]:
                    best = (key, x)
            new_pts.append(best[1] if best else e.copy())
        a, b = new_pts
        if float(np.linalg.norm(b - a)) <= 1e-6:
            a, b = w.axis_start, w.axis_end  # collapse guard: keep original
        a, b = (a, b) if tuple(a) <= tuple(b) else (b, a)
        out.append(replace(w, axis_start=a, axis_end=b))
    return out
