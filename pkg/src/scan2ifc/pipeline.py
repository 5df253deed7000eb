"""Pipeline orchestration: staged detection, IFC emission, and the run manifest.

Stages are plain functions over immutable inputs so the calibration service
can run and cache them independently; run_pipeline chains them all and
writes the IFC file plus a JSON manifest with timings and element counts.
"""
from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .cloud_io import PointCloud, dilute_spatial, load_cloud
from .config import Config
from .errors import StageError
from .ifc.model import build_model
from .ifc.step import write_step
from .openings import Opening, detect_openings, localize_points
from .raster import histogram_1d
from .slabs import (
    Slab,
    SlabSource,
    Storey,
    band_points_xy,
    find_horizontal_surfaces,
    footprint_from_points,
    pair_surfaces as pair_slab_surfaces,
    split_to_storeys,
)
from .walls import Wall, detect_surfaces, extract_slice, pair_surfaces as pair_wall_surfaces, snap_axes
from .zones import Zone, detect_zones


@dataclass
class SlabStage:
    histogram: object
    candidates: list
    slabs: list
    storeys: list
    warnings: list = field(default_factory=list)


@dataclass
class StoreyWalls:
    storey_index: int
    slice_points: np.ndarray
    surfaces: list
    walls: list


@dataclass
class WallStage:
    per_storey: list  # StoreyWalls
    walls: list  # flat, ordered by (storey, axis)

    def wall_by_ref(self, ref: tuple) -> Wall:
        si, wi = ref
        return self.per_storey[si].walls[wi]


@dataclass
class OpeningStage:
    openings: list


@dataclass
class ZoneStage:
    zones: list
    graphs: list
    warnings: list = field(default_factory=list)


@dataclass
class PipelineResult:
    slabs: list
    storeys: list
    walls: list
    openings: list
    zones: list
    warnings: list = field(default_factory=list)

    def wall_by_ref(self, ref: tuple) -> Wall:
        si, wi = ref
        count = 0
        for w in self.walls:
            if w.storey_index == si:
                if count == wi:
                    return w
                count += 1
        raise KeyError(ref)


@dataclass
class RunManifest:
    input_path: str
    input_sha256: str
    point_count: int
    params: dict
    timings_ms: dict
    counts: dict
    warnings: list
    tool_version: str
    points_per_minute: float
    ifc_path: str

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n"


def stage_slabs(cloud: PointCloud, cfg: Config) -> SlabStage:
    calib = cfg.calibration
    hist = histogram_1d(cloud.points[:, 2], calib.z_step)
    cands = find_horizontal_surfaces(cloud, calib.z_step, calib.max_n_points_array)
    slabs = pair_slab_surfaces(cands, cfg.input.bfs_thickness, cfg.input.tfs_thickness)
    warnings = []
    for slab in slabs:
        pts = band_points_xy(cloud, cands, slab.surface_indices)
        try:
            slab.footprint = footprint_from_points(
                pts, calib.cell_size, calib.dilation_meters, calib.erosion_meters, calib.smoothing_factor
            )
        except StageError as exc:
            warnings.append(f"slab at z={slab.z_bottom:.2f}: {exc}")
            raise
    storeys = split_to_storeys(cloud, slabs, calib.safety_margin)
    return SlabStage(hist, cands, slabs, storeys, warnings)


def stage_walls(storeys: list, cfg: Config) -> WallStage:
    calib = cfg.calibration
    ip = cfg.input
    per_storey = []
    flat = []
    for storey in storeys:
        pts2d = extract_slice(storey, tuple(calib.z_section_boundaries))
        surfaces = detect_surfaces(
            pts2d,
            calib.cell_size,
            calib.threshold,
            calib.kernel_cells,
            calib.epsilon,
            ip.min_wall_length,
            angle_tol=calib.angle_tolerance,
        )
        walls = pair_wall_surfaces(
            surfaces,
            ip.min_wall_thickness,
            ip.max_wall_thickness,
            calib.min_overlap_fraction,
            ip.exterior_walls_thickness,
            storey.index,
            storey.height,
            angle_tol=calib.angle_tolerance,
            slice_points=pts2d,
            side_clear=2 * calib.cell_size,
        )
        walls = snap_axes(walls, ip.max_wall_thickness)
        per_storey.append(StoreyWalls(storey.index, pts2d, surfaces, walls))
        flat.extend(walls)
    return WallStage(per_storey, flat)


def stage_openings(storeys: list, wall_stage: WallStage, cfg: Config) -> OpeningStage:
    bin_size = cfg.input.pc_resolution * 2.0
    end_margin = cfg.input.max_wall_thickness / 2.0
    heur = cfg.calibration.heuristics()
    openings = []
    for sw in wall_stage.per_storey:
        storey = storeys[sw.storey_index]
        for wi, wall in enumerate(sw.walls):
            local = localize_points(storey, wall, pad=cfg.calibration.cell_size)
            openings.extend(
                detect_openings(local, wall, (sw.storey_index, wi), heur, bin_size, end_margin)
            )
    return OpeningStage(openings)


def stage_zones(storeys: list, wall_stage: WallStage, cfg: Config) -> ZoneStage:
    zones = []
    graphs = []
    warnings = []
    for sw in wall_stage.per_storey:
        storey = storeys[sw.storey_index]
        z, graph, warn = detect_zones(
            sw.walls, cfg.input.snapping_distance, storey.index, storey.height,
            merge_tol=4 * cfg.calibration.cell_size,
        )
        zones.extend(z)
        graphs.append(graph)
        warnings.extend(warn)
    return ZoneStage(zones, graphs, warnings)


def run_detection(cloud: PointCloud, cfg: Config) -> tuple[PipelineResult, dict]:
    """All detection stages; returns the result and per-stage timings (ms)."""
    timings = {}
    t0 = time.perf_counter()
    slab_stage = stage_slabs(cloud, cfg)
    timings["slabs"] = (time.perf_counter() - t0) * 1000

    t0 = time.perf_counter()
    wall_stage = stage_walls(slab_stage.storeys, cfg)
    timings["walls"] = (time.perf_counter() - t0) * 1000

    t0 = time.perf_counter()
    opening_stage = stage_openings(slab_stage.storeys, wall_stage, cfg)
    timings["openings"] = (time.perf_counter() - t0) * 1000

    t0 = time.perf_counter()
    zone_stage = stage_zones(slab_stage.storeys, wall_stage, cfg)
    timings["zones"] = (time.perf_counter() - t0) * 1000

    result = PipelineResult(
        slabs=slab_stage.slabs,
        storeys=slab_stage.storeys,
        walls=wall_stage.walls,
        openings=opening_stage.openings,
        zones=zone_stage.zones,
        warnings=slab_stage.warnings + zone_stage.warnings,
    )
    return result, timings


def run_pipeline(
    cloud_path,
    cfg: Config,
    out_path,
    seed: int = 0,
    deterministic: bool = True,
    dilute: str = "none",
) -> RunManifest:
    """Load a cloud, run every stage, write the IFC file and its manifest.

    dilute: "none", "rows" (keep one of every dilution_factor rows), or
    "spatial" (minimum-distance dilution at pc_resolution).
    """
    cfg.validate()
    if dilute not in ("none", "rows", "spatial"):
        raise ValueError("dilute must be none, rows, or spatial")
    cloud_path = Path(cloud_path)
    out_path = Path(out_path)
    timings = {}

    t0 = time.perf_counter()
    sha = hashlib.sha256(cloud_path.read_bytes()).hexdigest()
    every = cfg.calibration.dilution_factor if dilute == "rows" else 1
    cloud = load_cloud(cloud_path, every_nth=every)
    if dilute == "spatial":
        cloud, _ = dilute_spatial(cloud, cfg.input.pc_resolution)
    timings["load"] = (time.perf_counter() - t0) * 1000
    input_count = cloud.count

    result, stage_timings = run_detection(cloud, cfg)
    timings.update(stage_timings)

    t0 = time.perf_counter()
    model = build_model(
        result.slabs, result.storeys, result.walls, result.openings, result.zones,
        cfg.input.meta(), seed=seed, deterministic=deterministic,
    )
    write_step(model, out_path)
    timings["ifc"] = (time.perf_counter() - t0) * 1000

    total_s = sum(timings.values()) / 1000
    counts = {
        "slabs": len(result.slabs),
        "storeys": len(result.storeys),
        "walls": len(result.walls),
        "openings": len(result.openings),
        "zones": len(result.zones),
        "elements": len(result.slabs) + len(result.walls) + len(result.openings) + len(result.zones),
    }
    from dataclasses import asdict

    params = {
        "input": asdict(cfg.input),
        "calibration": asdict(cfg.calibration),
        "seed": seed,
        "deterministic": deterministic,
        "dilute": dilute,
    }
    params["calibration"]["z_section_boundaries"] = list(params["calibration"]["z_section_boundaries"])
    manifest = RunManifest(
        input_path=str(cloud_path),
        input_sha256=sha,
        point_count=input_count,
        params=params,
        timings_ms={k: round(v, 3) for k, v in timings.items()},
        counts=counts,
        warnings=result.warnings,
        tool_version=__version__,
        points_per_minute=round(input_count / total_s * 60, 1) if total_s > 0 else 0.0,
        ifc_path=str(out_path),
    )
    manifest_path = out_path.with_suffix(out_path.suffix + ".manifest.json")
    manifest_path.write_text(manifest.to_json())
    return manifest
