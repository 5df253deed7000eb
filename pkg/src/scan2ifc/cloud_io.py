"""Point cloud loading, spatial dilution, and the binary re-load cache."""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CacheFormatError, CloudFormatError

CACHE_MAGIC = b"C2MCACHE"
CACHE_VERSION = 1


@dataclass
class PointCloud:
    points: np.ndarray  # (N, 3) float64

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)

    @property
    def count(self) -> int:
        return len(self.points)

    @property
    def bounds(self) -> tuple:
        if self.count == 0:
            z = np.zeros(3)
            return z, z
        return self.points.min(axis=0), self.points.max(axis=0)

    def __eq__(self, other):
        return isinstance(other, PointCloud) and np.array_equal(self.points, other.points)


@dataclass
class DilutionReport:
    d_min: float
    kept: int
    dropped: int
    input_count: int


def _parse_lines(path: Path) -> np.ndarray:
    """Line-by-line XYZ parse; slower but reports exact line numbers."""
    rows = []
    with open(path, "r", errors="replace") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split()
            if len(parts) < 3:
                raise CloudFormatError(f"{path}: line {lineno}: expected at least 3 numeric fields")
            try:
                rows.append((float(parts[0]), float(parts[1]), float(parts[2])))
            except ValueError:
                raise CloudFormatError(f"{path}: line {lineno}: non-numeric coordinate") from None
    return np.array(rows, dtype=np.float64).reshape(-1, 3)


def read_xyz(path, every_nth: int = 1) -> PointCloud:
    """Read an ASCII XYZ file (whitespace-delimited, '#' comments skipped).

    Extra per-line fields (colors, intensity) are parsed and discarded.
    every_nth > 1 keeps one of every n data rows (row subsampling, distinct
    from spatial dilution). E57 and other binary containers are unsupported;
    convert upstream.
    """
    path = Path(path)
    if not path.exists():
        raise CloudFormatError(f"{path}: file not found")
    import warnings

    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # empty files warn before returning 0 rows
            arr = np.loadtxt(path, comments="#", usecols=(0, 1, 2), dtype=np.float64, ndmin=2)
    except Exception:
        arr = _parse_lines(path)
    arr = arr.reshape(-1, 3)
    if not np.isfinite(arr).all():
        bad = int(np.nonzero(~np.isfinite(arr).all(axis=1))[0][0])
        raise CloudFormatError(f"{path}: non-finite coordinate at data row {bad + 1}")
    if every_nth > 1:
        arr = arr[::every_nth]
    return PointCloud(arr)


def _morton3(ix: np.ndarray, iy: np.ndarray, iz: np.ndarray) -> np.ndarray:
    """Interleave three 21-bit cell indices into one Morton code."""

    def spread(v):
        v = v.astype(np.uint64) & np.uint64(0x1FFFFF)
        v = (v | (v << np.uint64(32))) & np.uint64(0x1F00000000FFFF)
        v = (v | (v << np.uint64(16))) & np.uint64(0x1F0000FF0000FF)
        v = (v | (v << np.uint64(8))) & np.uint64(0x100F00F00F00F00F)
        v = (v | (v << np.uint64(4))) & np.uint64(0x10C30C30C30C30C3)
        v = (v | (v << np.uint64(2))) & np.uint64(0x1249249249249249)
        return v

    return spread(ix) | (spread(iy) << np.uint64(1)) | (spread(iz) << np.uint64(2))


def dilute_spatial(cloud: PointCloud, d_min: float) -> tuple[PointCloud, DilutionReport]:
    """Greedy subsampling so no two kept points are closer than d_min.

    Points are visited in Morton order of their hash-grid cell (cell size
    d_min), file order within a cell; a point is kept when no already-kept
    point lies within d_min. Deterministic across runs.
    """
    if d_min < 0:
        raise ValueError("d_min must be >= 0")
    if cloud.count == 0:
        raise ValueError("cloud is empty")
    if d_min == 0:
        return PointCloud(cloud.points.copy()), DilutionReport(0.0, cloud.count, 0, cloud.count)

    pts = cloud.points
    mins = pts.min(axis=0)
    cells = np.floor((pts - mins) / d_min).astype(np.int64)
    codes = _morton3(cells[:, 0], cells[:, 1], cells[:, 2])
    order = np.lexsort((np.arange(len(pts)), codes))

    grid: dict = {}
    kept_idx = []
    d2 = d_min * d_min
    neighbor = [(dx, dy, dz) for dx in (-1, 0, 1) for dy in (-1, 0, 1) for dz in (-1, 0, 1)]
    for i in order:
        cx, cy, cz = cells[i]
        p = pts[i]
        ok = True
        for dx, dy, dz in neighbor:
            bucket = grid.get((cx + dx, cy + dy, cz + dz))
            if not bucket:
                continue
            q = pts[bucket]
            if ((q - p) ** 2).sum(axis=1).min() < d2:
                ok = False
                break
        if ok:
            kept_idx.append(i)
            grid.setdefault((cx, cy, cz), []).append(i)
    kept_idx = np.sort(np.array(kept_idx, dtype=np.int64))
    out = PointCloud(pts[kept_idx])
    return out, DilutionReport(d_min, len(kept_idx), cloud.count - len(kept_idx), cloud.count)


def write_cache(cloud: PointCloud, path) -> Path:
    """Write the binary cache: magic, u32 version, u64 count, little-endian f64 triples."""
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<IQ", CACHE_VERSION, cloud.count))
        fh.write(cloud.points.astype("<f8").tobytes())
    return path


def read_cache(path) -> PointCloud:
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != CACHE_MAGIC:
            raise CacheFormatError(f"{path}: bad magic")
        header = fh.read(12)
        if len(header) != 12:
            raise CacheFormatError(f"{path}: truncated header")
        version, count = struct.unpack("<IQ", header)
        if version != CACHE_VERSION:
            raise CacheFormatError(f"{path}: unsupported cache version {version}")
        payload = fh.read(count * 24)
        if len(payload) != count * 24:
            raise CacheFormatError(f"{path}: truncated payload")
        pts = np.frombuffer(payload, dtype="<f8").reshape(-1, 3)
    return PointCloud(pts.astype(np.float64))


def load_cloud(path, every_nth: int = 1) -> PointCloud:
    """Dispatch on extension: .c2m cache or ASCII XYZ."""
    path = Path(path)
    if path.suffix.lower() == ".c2m":
        cloud = read_cache(path)
        if every_nth > 1:
            cloud = PointCloud(cloud.points[::every_nth])
        return cloud
    return read_xyz(path, every_nth=every_nth)
