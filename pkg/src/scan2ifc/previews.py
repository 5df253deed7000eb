"""Raster previews (PNG) and JSON artifacts for the calibration service."""
from __future__ import annotations

import io

import numpy as np
from PIL import Image

from .raster import BinaryMask, DensityGrid, Histogram1D

HEATMAP_MAX_M = 0.05  # fixed color scale; outliers beyond 50 mm saturate


def _to_png(img: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(img).save(buf, format="PNG")
    return buf.getvalue()


def grid_png(grid: DensityGrid) -> bytes:
    counts = grid.counts.astype(float)
    if counts.size == 0:
        return _to_png(np.zeros((1, 1), dtype=np.uint8))
    scaled = np.log1p(counts)
    mx = scaled.max() or 1.0
    img = (scaled / mx * 255).astype(np.uint8)
    return _to_png(img[::-1])  # world y up -> image row 0 at top


def mask_png(mask: BinaryMask) -> bytes:
    if mask.bits.size == 0:
        return _to_png(np.zeros((1, 1), dtype=np.uint8))
    img = (mask.bits.astype(np.uint8)) * 255
    return _to_png(img[::-1])


def heatmap_png(points_xy: np.ndarray, distances: np.ndarray, cell: float = 0.02) -> bytes:
    """Plan-view max-distance heat map, blue (0) to red (>= 50 mm)."""
    pts = np.asarray(points_xy, dtype=float).reshape(-1, 2)
    d = np.asarray(distances, dtype=float).ravel()
    if len(pts) == 0:
        return _to_png(np.zeros((1, 1, 3), dtype=np.uint8))
    lo = pts.min(axis=0)
    ix = np.floor((pts[:, 0] - lo[0]) / cell).astype(int)
    iy = np.floor((pts[:, 1] - lo[1]) / cell).astype(int)
    w, h = int(ix.max()) + 1, int(iy.max()) + 1
    acc = np.zeros((h, w))
    np.maximum.at(acc, (iy, ix), d)
    t = np.clip(acc / HEATMAP_MAX_M, 0.0, 1.0)
    img = np.zeros((h, w, 3), dtype=np.uint8)
    img[..., 0] = (t * 255).astype(np.uint8)
    img[..., 2] = ((1.0 - t) * 255).astype(np.uint8)
    img[..., 1] = (np.minimum(t, 1.0 - t) * 2 * 160).astype(np.uint8)
    return _to_png(img[::-1])


def histogram_json(hist: Histogram1D) -> dict:
    return {
        "origin": hist.origin,
        "bin_size": hist.bin_size,
        "counts": [int(c) for c in hist.counts],
    }


def grid_meta_json(grid) -> dict:
    return {
        "origin": [float(grid.origin[0]), float(grid.origin[1])],
        "cell_size": float(grid.cell_size),
        "width": int(grid.width),
        "height": int(grid.height),
    }
