"""Horizontal surface detection, slab pairing, and storey segmentation.

Slab surfaces show up as sharp peaks in the z-density histogram; bands of
bins above a fraction of the peak count become surface candidates, which are
paired bottom-up into volumetric slabs. Points between consecutive slabs
form the storeys.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .cloud_io import PointCloud
from .errors import FootprintCollapsedError, NoSurfacesError, StageError
from .geom2d import Polygon2D, Polyline2D, simplify
from .raster import binarize, dilate, erode, histogram_1d, histogram_2d, pad_mask, trace_contours


class SlabSource(Enum):
    PAIRED = "paired"
    MANUAL_BOTTOM = "manual_bottom"
    MANUAL_TOP = "manual_top"


@dataclass
class SurfaceCandidate:
    z_low: float
    z_high: float
    point_count: int
    z_mean: float  # count-weighted mean z of the band


@dataclass
class Slab:
    footprint: Polygon2D | None
    z_bottom: float
    thickness: float
    source: SlabSource
    surface_indices: tuple = ()

    @property
    def z_top(self) -> float:
        return self.z_bottom + self.thickness


@dataclass
class Storey:
    index: int
    z_floor_top: float
    z_ceiling_bottom: float
    points: PointCloud

    @property
    def height(self) -> float:
        return self.z_ceiling_bottom - self.z_floor_top


def find_horizontal_surfaces(cloud: PointCloud, z_step: float, ratio: float) -> list[SurfaceCandidate]:
    """Maximal contiguous z-histogram bands with count >= ratio * max bin count.

    Bands wider than 3 bins are split at interior local minima so the floor
    and ceiling of a thin slab cannot merge into one candidate. Candidates
    come back sorted ascending by z.
    """
    if z_step <= 0:
        raise ValueError("z_step must be > 0")
    if not 0 < ratio <= 1:
        raise ValueError("ratio must be in (0, 1]")
    if cloud.count == 0:
        return []
    z = cloud.points[:, 2]
    hist = histogram_1d(z, z_step)
    counts = hist.counts
    thr = ratio * counts.max()
    above = counts >= thr

    runs = []
    i = 0
    n = len(counts)
    while i < n:
        if above[i]:
            j = i
            while j + 1 < n and above[j + 1]:
                j += 1
            runs.append((i, j))
            i = j + 1
        else:
            i += 1

    def split_run(i0, j0):
        if j0 - i0 + 1 <= 3:
            return [(i0, j0)]
        # interior local minima separate stacked surfaces
        cuts = [k for k in range(i0 + 1, j0) if counts[k] < counts[k - 1] and counts[k] < counts[k + 1]]
        if not cuts:
            return [(i0, j0)]
        out = []
        start = i0
        for k in cuts:
            if k - 1 >= start:
                out.append((start, k - 1))
            start = k + 1
        if start <= j0:
            out.append((start, j0))
        return out

    bands = []
    for i0, j0 in runs:
        bands.extend(split_run(i0, j0))

    # per-bin z sums give exact band means without a second pass over points
    idx = np.floor((z - hist.origin) / z_step).astype(np.int64)
    idx = np.clip(idx, 0, n - 1)
    zsum = np.bincount(idx, weights=z, minlength=n)

    cands = []
    for i0, j0 in bands:
        total = int(counts[i0 : j0 + 1].sum())
        if total == 0:
            continue
        mean = float(zsum[i0 : j0 + 1].sum() / total)
        cands.append(
            SurfaceCandidate(
                z_low=hist.bin_left(i0),
                z_high=hist.bin_left(j0 + 1),
                point_count=total,
                z_mean=mean,
            )
        )
    cands.sort(key=lambda c: c.z_low)
    return cands


def pair_surfaces(cands: list[SurfaceCandidate], bfs_thickness: float, tfs_thickness: float) -> list[Slab]:
    """Pair surface candidates into slab z-extents.

    The first candidate is a bottom surface scanned from above only: it gets
    bfs_thickness with its top at the band. Remaining candidates pair
    consecutively (ceiling below, floor above); a trailing unpaired candidate
    gets tfs_thickness. Footprints are attached later.
    """
    if not cands:
        raise NoSurfacesError()
    if bfs_thickness <= 0 or tfs_thickness <= 0:
        raise ValueError("manual slab thicknesses must be > 0")
    slabs = [
        Slab(
            footprint=None,
            z_bottom=cands[0].z_mean - bfs_thickness,
            thickness=bfs_thickness,
            source=SlabSource.MANUAL_BOTTOM,
            surface_indices=(0,),
        )
    ]
    rest = list(range(1, len(cands)))
    while len(rest) >= 2:
        i, j = rest.pop(0), rest.pop(0)
        thickness = cands[j].z_mean - cands[i].z_mean
        if thickness <= 0:
            thickness = bfs_thickness
        slabs.append(
            Slab(
                footprint=None,
                z_bottom=cands[i].z_mean,
                thickness=thickness,
                source=SlabSource.PAIRED,
                surface_indices=(i, j),
            )
        )
    if rest:
        k = rest[0]
        slabs.append(
            Slab(
                footprint=None,
                z_bottom=cands[k].z_mean,
                thickness=tfs_thickness,
                source=SlabSource.MANUAL_TOP,
                surface_indices=(k,),
            )
        )
    return slabs


def footprint_from_points(
    points_xy: np.ndarray,
    cell_size: float,
    dilation_m: float,
    erosion_m: float,
    smoothing_eps: float,
) -> Polygon2D:
    """Plan-view hull of a slab's surface points.

    Rasterize, binarize any occupied cell, close gaps with dilation, shrink
    back with erosion, take the largest contour, then simplify it.
    """
    points_xy = np.asarray(points_xy, dtype=float).reshape(-1, 2)
    if len(points_xy) < 3:
        raise StageError("slabs", "too few points for a footprint")
    grid = histogram_2d(points_xy, cell_size)
    mask = binarize(grid, 0.0)
    # give the dilation room to grow past the data extent, or the following
    # erosion would permanently shave the border
    mask = pad_mask(mask, int(math.ceil(dilation_m / cell_size)) + 1)
    mask = dilate(mask, dilation_m)
    mask = erode(mask, erosion_m)
    if not mask.bits.any():
        raise FootprintCollapsedError()
    contour = trace_contours(mask)[0]
    simplified = simplify(contour, smoothing_eps)
    if len(simplified.vertices) < 3:
        raise FootprintCollapsedError("footprint degenerated to a line; reduce smoothing")
    return Polygon2D(simplified.vertices)


def band_points_xy(cloud: PointCloud, cands: list[SurfaceCandidate], indices) -> np.ndarray:
    """Plan coordinates of points inside the given candidate bands (merged)."""
    z = cloud.points[:, 2]
    sel = np.zeros(cloud.count, dtype=bool)
    for i in indices:
        c = cands[i]
        sel |= (z >= c.z_low) & (z < c.z_high)
    return cloud.points[sel, :2]


def split_to_storeys(cloud: PointCloud, slabs: list[Slab], clearance: float) -> list[Storey]:
    """Point subsets strictly between consecutive slabs, with a safety margin.

    Storey i holds points with z in (top(slab_i) + clearance,
    bottom(slab_{i+1}) - clearance), returned bottom-up.
    """
    if len(slabs) < 2:
        raise StageError("storeys", "need at least 2 slabs to split storeys")
    if clearance < 0:
        raise ValueError("clearance must be >= 0")
    order = sorted(range(len(slabs)), key=lambda k: slabs[k].z_bottom)
    slabs = [slabs[k] for k in order]
    for a, b in zip(slabs, slabs[1:]):
        if b.z_bottom < a.z_top:
            raise StageError("storeys", f"slabs overlap in z near {b.z_bottom:.3f}")
    z = cloud.points[:, 2]
    storeys = []
    for i in range(len(slabs) - 1):
        lo = slabs[i].z_top
        hi = slabs[i + 1].z_bottom
        sel = (z > lo + clearance) & (z < hi - clearance)
        storeys.append(
            Storey(
                index=i,
                z_floor_top=lo,
                z_ceiling_bottom=hi,
                points=PointCloud(cloud.points[sel]),
            )
        )
    return storeys
