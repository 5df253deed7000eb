"""Rectangular opening detection from per-wall point density histograms.

Points assigned to a wall are rotated into wall-local (u, v) coordinates;
low-density runs in the u histogram mark candidate openings, and the v
histogram inside each candidate gives sill and height. Heuristic bounds on
width, height, aspect ratio, and sill separate doors from windows and weed
out noise gaps.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .raster import Histogram1D, histogram_1d_range
from .slabs import Storey
from .walls import Wall


class OpeningKind(Enum):
    DOOR = "door"
    WINDOW = "window"


@dataclass
class OpeningHeuristics:
    door_max_sill: float = 0.1
    min_width: float = 0.5
    max_width: float = 3.0
    min_height: float = 0.5
    aspect_min: float = 0.3
    aspect_max: float = 4.0
    tenth_max_rank: int = 10
    gap_fraction: float = 0.25

    def validate(self):
        if min(self.door_max_sill, self.min_width, self.max_width, self.min_height,
               self.aspect_min, self.aspect_max, self.gap_fraction) <= 0:
            raise ValueError("opening heuristics must be positive")
        if self.aspect_min >= self.aspect_max:
            raise ValueError("aspect_min must be < aspect_max")
        if self.tenth_max_rank < 1:
            raise ValueError("tenth_max_rank must be >= 1")


@dataclass
class Opening:
    wall_ref: tuple  # (storey_index, wall_index)
    x_offset: float
    width: float
    sill: float
    height: float
    kind: OpeningKind


def localize_points(storey: Storey, wall: Wall, pad: float = 0.0) -> np.ndarray:
    """Storey points near the wall plane, as (u, v) wall-local meters.

    u runs along the axis from axis_start, v is height above the storey
    floor. Points qualify when within thickness/2 + pad of the axis plane
    and within the axis extent (padded).
    """
    pts = storey.points.points
    if len(pts) == 0:
        return np.zeros((0, 2))
    d = wall.direction
    n = np.array([-d[1], d[0]])
    rel = pts[:, :2] - wall.axis_start
    u = rel @ d
    perp = rel @ n
    sel = (np.abs(perp) <= wall.thickness / 2.0 + pad) & (u >= -pad) & (u <= wall.length + pad)
    out = np.column_stack([u[sel], pts[sel, 2] - storey.z_floor_top])
    return out


def detect_gaps(hist: Histogram1D, rank: int, fraction: float) -> list[tuple]:
    """Low-density runs in a histogram, in meters.

    The threshold is fraction times the rank-th largest recorded (nonzero)
    bin count, which ignores the handful of extreme maxima real scans
    produce; with fewer than rank occupied bins the smallest occupied count
    serves as reference. Runs touching the histogram ends are kept. An
    all-empty histogram is one full-extent gap.
    """
    if rank < 1:
        raise ValueError("rank must be >= 1")
    counts = hist.counts
    n = len(counts)
    if n == 0:
        return []
    extent_end = hist.bin_left(n)
    if counts.sum() == 0:
        return [(hist.origin, extent_end)]
    recorded = np.sort(counts[counts > 0])[::-1]
    ref = int(recorded[min(rank, len(recorded)) - 1])
    thr = fraction * ref
    below = counts < thr
    gaps = []
    i = 0
    while i < n:
        if below[i]:
            j = i
            while j + 1 < n and below[j + 1]:
                j += 1
            gaps.append((hist.bin_left(i), hist.bin_left(j + 1)))
            i = j + 1
        else:
            i += 1
    return gaps


def _merge_close(gaps: list[tuple], min_sep: float) -> list[tuple]:
    """Fuse gap runs separated by less than min_sep (adjacent voids)."""
    if not gaps:
        return []
    out = [gaps[0]]
    for g in gaps[1:]:
        if g[0] - out[-1][1] < min_sep:
            out[-1] = (out[-1][0], g[1])
        else:
            out.append(g)
    return out


def detect_openings(
    local_points: np.ndarray,
    wall: Wall,
    wall_ref: tuple,
    heuristics: OpeningHeuristics,
    bin_size: float,
    end_margin: float = 0.0,
) -> list[Opening]:
    """Openings on one wall from its local point set.

    u-histogram gaps give candidate ranges; the v histogram restricted to
    each range gives sill and height (the largest v-gap wins, since storey
    clearance leaves thin empty bands at the very top and bottom of every
    wall). Candidates inside end_margin of an axis endpoint are corner
    shadows from crossing walls and are discarded.
    """
    heuristics.validate()
    pts = np.asarray(local_points, dtype=float).reshape(-1, 2)
    if len(pts) == 0 or wall.length <= 0:
        return []
    rank = heuristics.tenth_max_rank
    fraction = heuristics.gap_fraction

    u_hist = histogram_1d_range(pts[:, 0], bin_size, 0.0, wall.length)
    gaps = _merge_close(detect_gaps(u_hist, rank, fraction), 2.0 * bin_size)

    openings = []
    for u0, u1 in gaps:
        if u0 < end_margin or u1 > wall.length - end_margin:
            continue
        width = u1 - u0
        if not (heuristics.min_width <= width <= heuristics.max_width):
            continue
        # shrink by one bin so flanking wall columns on the gap's edge bins
        # cannot mask the vertical void
        pad_u = bin_size if (u1 - u0) > 3 * bin_size else 0.0
        in_range = pts[(pts[:, 0] >= u0 + pad_u) & (pts[:, 0] < u1 - pad_u)]
        v_hist = histogram_1d_range(in_range[:, 1], bin_size, 0.0, wall.height)
        v_gaps = _merge_close(detect_gaps(v_hist, rank, fraction), 2.0 * bin_size)
        if not v_gaps:
            continue
        v0, v1 = max(v_gaps, key=lambda g: (g[1] - g[0], -g[0]))
        sill = max(0.0, v0)
        height = min(v1, wall.height) - sill
        if height < heuristics.min_height:
            continue
        aspect = height / width
        if not (heuristics.aspect_min <= aspect <= heuristics.aspect_max):
            continue
        x_offset = max(0.0, u0)
        width = min(width, wall.length - x_offset)
        openings.append(
            Opening(
                wall_ref=wall_ref,
                x_offset=x_offset,
                width=width,
                sill=sill,
                height=height,
                kind=OpeningKind.DOOR if sill <= heuristics.door_max_sill else OpeningKind.WINDOW,
            )
        )
    return openings
