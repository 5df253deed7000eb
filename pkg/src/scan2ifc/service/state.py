"""Calibration session state: loaded cloud, live params, stage caches."""
from __future__ import annotations

import hashlib
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..cloud_io import PointCloud, load_cloud
from ..config import Config
from ..pipeline import stage_openings, stage_slabs, stage_walls, stage_zones

STAGES = ("slabs", "walls", "openings", "zones")

# parameter subsets each stage depends on (calibration keys unless noted)
_STAGE_FIELDS = {
    "slabs": [
        ("calibration", "grid_coefficient"),
        ("calibration", "z_step"),
        ("calibration", "max_n_points_array"),
        ("calibration", "dilation_meters"),
        ("calibration", "erosion_meters"),
        ("calibration", "smoothing_factor"),
        ("calibration", "safety_margin"),
        ("input", "bfs_thickness"),
        ("input", "tfs_thickness"),
    ],
    "walls": [
        ("calibration", "grid_coefficient"),
        ("calibration", "z_section_boundaries"),
        ("calibration", "threshold"),
        ("calibration", "kernel_cells"),
        ("calibration", "epsilon"),
        ("calibration", "angle_tolerance"),
        ("calibration", "min_overlap_fraction"),
        ("input", "min_wall_length"),
        ("input", "min_wall_thickness"),
        ("input", "max_wall_thickness"),
        ("input", "exterior_walls_thickness"),
    ],
    "openings": [
        ("calibration", "max10"),
        ("calibration", "gap_fraction"),
        ("calibration", "openings"),
        ("input", "pc_resolution"),
        ("input", "max_wall_thickness"),
    ],
    "zones": [
        ("input", "snapping_distance"),
        ("calibration", "grid_coefficient"),
    ],
}
_PREREQ = {"slabs": None, "walls": "slabs", "openings": "walls", "zones": "walls"}


@dataclass
class StageEntry:
    key: str
    result: object
    artifacts: dict
    previews: dict  # name -> preview id
    elapsed_ms: float


@dataclass
class CalibrationSession:
    cloud: PointCloud
    cloud_path: str
    cfg: Config = field(default_factory=Config)
    stages: dict = field(default_factory=dict)  # stage -> StageEntry
    previews: dict = field(default_factory=dict)  # id -> (media_type, bytes)
    loaded_at: float = field(default_factory=time.time)

    @classmethod
    def from_path(cls, path) -> "CalibrationSession":
        return cls(cloud=load_cloud(path), cloud_path=str(path))

    def stage_key(self, stage: str) -> str:
        payload = {}
        for section, name in _STAGE_FIELDS[stage]:
            value = getattr(getattr(self.cfg, section), name)
            if hasattr(value, "__dataclass_fields__"):
                value = asdict(value)
            elif isinstance(value, tuple):
                value = list(value)
            payload[f"{section}.{name}"] = value
        prereq = _PREREQ[stage]
        if prereq:
            payload["__upstream__"] = self.stage_key(prereq)
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()

    def fresh(self, stage: str) -> bool:
        entry = self.stages.get(stage)
        return entry is not None and entry.key == self.stage_key(stage)

    def prerequisite_missing(self, stage: str):
        prereq = _PREREQ[stage]
        if prereq is None:
            return None
        if not self.fresh(prereq):
            return prereq
        return None

    def store_preview(self, stage: str, name: str, data: bytes, media_type="image/png") -> str:
        pid = f"{stage}-{name}-{hashlib.sha256(data).hexdigest()[:12]}"
        self.previews[pid] = (media_type, data)
        return pid

    def run_stage(self, stage: str) -> tuple[StageEntry, bool]:
        """Run (or serve from cache) one stage; prerequisites must be fresh."""
        if self.fresh(stage):
            return self.stages[stage], True
        t0 = time.perf_counter()
        if stage == "slabs":
            result = stage_slabs(self.cloud, self.cfg)
        elif stage == "walls":
            result = stage_walls(self.stages["slabs"].result.storeys, self.cfg)
        elif stage == "openings":
            result = stage_openings(
                self.stages["slabs"].result.storeys, self.stages["walls"].result, self.cfg
            )
        elif stage == "zones":
            result = stage_zones(
                self.stages["slabs"].result.storeys, self.stages["walls"].result, self.cfg
            )
        else:
            raise KeyError(stage)
        elapsed = (time.perf_counter() - t0) * 1000
        artifacts, previews = self._artifacts(stage, result)
        entry = StageEntry(self.stage_key(stage), result, artifacts, previews, round(elapsed, 3))
        self.stages[stage] = entry
        return entry, False

    def _artifacts(self, stage: str, result) -> tuple[dict, dict]:
        from .. import previews as pv
        from ..openings import localize_points
        from ..raster import binarize, close_cells, histogram_1d_range, histogram_2d, pad_mask

        calib = self.cfg.calibration
        previews = {}
        if stage == "slabs":
            artifacts = {
                "z_histogram": pv.histogram_json(result.histogram),
                "candidates": [
                    {"z_low": c.z_low, "z_high": c.z_high, "count": c.point_count, "z_mean": c.z_mean}
                    for c in result.candidates
                ],
                "slabs": [
                    {
                        "z_bottom": s.z_bottom,
                        "thickness": s.thickness,
                        "source": s.source.value,
                        "footprint": s.footprint.vertices.tolist() if s.footprint else None,
                    }
                    for s in result.slabs
                ],
                "storeys": [
                    {"index": s.index, "z_floor_top": s.z_floor_top,
                     "z_ceiling_bottom": s.z_ceiling_bottom, "points": s.points.count}
                    for s in result.storeys
                ],
                "warnings": result.warnings,
            }
            return artifacts, previews
        if stage == "walls":
            from ..geom2d import simplify
            from ..raster import trace_contours

            per_storey = []
            for sw in result.per_storey:
                grid = histogram_2d(sw.slice_points, calib.cell_size)
                mask = binarize(grid, calib.threshold)
                k = max(0, calib.kernel_cells // 2)
                mask = close_cells(pad_mask(mask, k + 1), k)
                contours = [
                    simplify(c, calib.epsilon).vertices.tolist() for c in trace_contours(mask)
                ]
                previews[f"grid-{sw.storey_index}"] = self.store_preview(
                    stage, f"grid-{sw.storey_index}", pv.grid_png(grid)
                )
                previews[f"mask-{sw.storey_index}"] = self.store_preview(
                    stage, f"mask-{sw.storey_index}", pv.mask_png(mask)
                )
                per_storey.append(
                    {
                        "storey": sw.storey_index,
                        "grid": pv.grid_meta_json(grid),
                        "contours": contours,
                        "segments": [
                            {"a": s.segment.a.tolist(), "b": s.segment.b.tolist(),
                             "length": s.segment.length}
                            for s in sw.surfaces
                        ],
                        "walls": [
                            {
                                "axis_start": w.axis_start.tolist(),
                                "axis_end": w.axis_end.tolist(),
                                "thickness": w.thickness,
                                "height": w.height,
                                "exterior": w.exterior,
                            }
                            for w in sw.walls
                        ],
                    }
                )
            return {"storeys": per_storey}, previews
        if stage == "openings":
            walls_stage = self.stages["walls"].result
            storeys = self.stages["slabs"].result.storeys
            bin_size = self.cfg.input.pc_resolution * 2.0
            items = []
            for op in result.openings:
                items.append(
                    {
                        "wall": list(op.wall_ref),
                        "x_offset": op.x_offset,
                        "width": op.width,
                        "sill": op.sill,
                        "height": op.height,
                        "kind": op.kind.value,
                    }
                )
            hists = []
            for sw in walls_stage.per_storey:
                storey = storeys[sw.storey_index]
                for wi, wall in enumerate(sw.walls):
                    local = localize_points(storey, wall, pad=calib.cell_size)
                    if len(local) == 0:
                        continue
                    u_hist = histogram_1d_range(local[:, 0], bin_size, 0.0, wall.length)
                    v_hist = histogram_1d_range(local[:, 1], bin_size, 0.0, wall.height)
                    hists.append(
                        {"wall": [sw.storey_index, wi],
                         "u": pv.histogram_json(u_hist), "v": pv.histogram_json(v_hist)}
                    )
            return {"openings": items, "histograms": hists}, previews
        if stage == "zones":
            artifacts = {
                "zones": [
                    {
                        "name": z.name,
                        "storey": z.storey_index,
                        "area": z.area,
                        "boundary": z.boundary.vertices.tolist(),
                    }
                    for z in result.zones
                ],
                "graphs": [
                    {
                        "nodes": [list(map(float, xy)) for xy in g.nodes],
                        "edges": [[int(u), int(v)] for u, v, _ in g.edges],
                    }
                    for g in result.graphs
                ],
                "warnings": result.warnings,
            }
            return artifacts, previews
        raise KeyError(stage)
