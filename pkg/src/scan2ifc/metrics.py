"""Precision metrics: point-to-model distances and detection scorecards."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geom2d import Polygon2D
from .openings import Opening, OpeningKind
from .synth import GroundTruth, GTOpening, HPolyFace, RectFace

_CHUNK = 200_000


def _decompose(face: RectFace) -> list[tuple]:
    """Void-free sub-rectangles (u0, u1, v0, v1) of a rectangular face."""
    rects = []
    voids = sorted((max(0.0, u0), min(face.ulen, u1), v0, v1) for u0, u1, v0, v1 in face.voids)
    cur = 0.0
    for u0, u1, v0, v1 in voids:
        if u0 > cur + 1e-12:
            rects.append((cur, u0, 0.0, face.vlen))
        if v0 > 1e-12:
            rects.append((u0, u1, 0.0, v0))
        if v1 < face.vlen - 1e-12:
            rects.append((u0, u1, v1, face.vlen))
        cur = max(cur, u1)
    if cur < face.ulen - 1e-12:
        rects.append((cur, face.ulen, 0.0, face.vlen))
    return rects


def _rect_distances(pts: np.ndarray, face: RectFace, sub: tuple) -> np.ndarray:
    u0, u1, v0, v1 = sub
    rel = pts - face.origin
    u = rel @ face.udir
    v = rel @ face.vdir
    n = np.cross(face.udir, face.vdir)
    w = rel @ n
    du = np.maximum(np.maximum(u0 - u, u - u1), 0.0)
    dv = np.maximum(np.maximum(v0 - v, v - v1), 0.0)
    return np.sqrt(du * du + dv * dv + w * w)


def _hpoly_distances(pts: np.ndarray, face: HPolyFace) -> np.ndarray:
    poly = Polygon2D(face.polygon)
    dz = np.abs(pts[:, 2] - face.z)
    inside = poly.contains(pts[:, :2])
    d2 = np.full(len(pts), np.inf)
    v = face.polygon
    n = len(v)
    x, y = pts[:, 0], pts[:, 1]
    for i in range(n):
        x1, y1 = v[i]
        x2, y2 = v[(i + 1) % n]
        dx, dy = x2 - x1, y2 - y1
        ll = dx * dx + dy * dy
        if ll == 0:
            continue
        t = np.clip(((x - x1) * dx + (y - y1) * dy) / ll, 0.0, 1.0)
        d2 = np.minimum(d2, (x1 + t * dx - x) ** 2 + (y1 + t * dy - y) ** 2)
    inplane = np.where(inside, 0.0, np.sqrt(d2))
    return np.sqrt(inplane * inplane + dz * dz)


@dataclass
class DeviationStats:
    distances: np.ndarray

    @property
    def p50(self) -> float:
        return float(np.percentile(self.distances, 50))

    @property
    def p95(self) -> float:
        return float(np.percentile(self.distances, 95))

    @property
    def p99(self) -> float:
        return float(np.percentile(self.distances, 99))

    @property
    def max(self) -> float:
        return float(self.distances.max())

    def count_over(self, threshold: float) -> int:
        return int(np.count_nonzero(self.distances > threshold))


def deviation(points: np.ndarray, faces: list) -> DeviationStats:
    """Absolute distance from every point to the nearest model face."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if not faces:
        raise ValueError("model has no faces")
    # pre-decompose rectangular faces once
    plan = []
    for face in faces:
        if isinstance(face, RectFace):
            for sub in _decompose(face):
                plan.append(("rect", face, sub))
        else:
            plan.append(("hpoly", face, None))
    out = np.empty(len(pts))
    for start in range(0, len(pts), _CHUNK):
        chunk = pts[start : start + _CHUNK]
        best = np.full(len(chunk), np.inf)
        for kind, face, sub in plan:
            if kind == "rect":
                np.minimum(best, _rect_distances(chunk, face, sub), out=best)
            else:
                np.minimum(best, _hpoly_distances(chunk, face), out=best)
        out[start : start + len(chunk)] = best
    return DeviationStats(out)


def faces_from_elements(slabs, walls, openings, storeys) -> list:
    """Model faces for deviation: wall side faces (openings cut) + slab faces."""
    faces = []
    for slab in slabs:
        if slab.footprint is None:
            continue
        poly = slab.footprint.vertices
        faces.append(HPolyFace(poly.copy(), slab.z_bottom))
        faces.append(HPolyFace(poly.copy(), slab.z_top))
    by_wall: dict = {}
    for op in openings:
        by_wall.setdefault(op.wall_ref, []).append(op)
    per_storey_counter: dict = {}
    for wall in walls:
        si = wall.storey_index
        ordinal = per_storey_counter.get(si, 0)
        per_storey_counter[si] = ordinal + 1
        voids = [
            (op.x_offset, op.x_offset + op.width, op.sill, op.sill + op.height)
            for op in by_wall.get((si, ordinal), [])
        ]
        floor_top = storeys[si].z_floor_top
        d = wall.direction
        nrm = np.array([-d[1], d[0]])
        for sign in (1.0, -1.0):
            off = wall.axis_start + sign * nrm * (wall.thickness / 2.0)
            faces.append(
                RectFace(
                    origin=np.array([off[0], off[1], floor_top]),
                    udir=np.array([d[0], d[1], 0.0]),
                    vdir=np.array([0.0, 0.0, 1.0]),
                    ulen=wall.length,
                    vlen=wall.height,
                    voids=list(voids),
                )
            )
    return faces


@dataclass
class ClassScore:
    truth_count: int
    detected_count: int
    matched: int
    errors: dict = field(default_factory=dict)

    @property
    def recall(self) -> float:
        return self.matched / self.truth_count if self.truth_count else 1.0

    @property
    def precision(self) -> float:
        return self.matched / self.detected_count if self.detected_count else 1.0


@dataclass
class MatchTolerances:
    wall_endpoint: float = 0.05
    wall_thickness: float = 0.02
    slab_z: float = 0.05
    opening_center: float = 0.15
    opening_dims: float = 0.08
    zone_center: float = 0.25

    @classmethod
    def from_params(cls, cell_size: float, opening_bin: float, z_step: float) -> "MatchTolerances":
        return cls(
            wall_endpoint=2 * cell_size,
            wall_thickness=0.02,
            slab_z=z_step,
            opening_center=max(2 * opening_bin, 0.1),
            opening_dims=2 * opening_bin,
            zone_center=0.25,
        )


@dataclass
class ScoreCard:
    classes: dict  # name -> ClassScore

    def recall(self, name: str) -> float:
        return self.classes[name].recall

    def precision(self, name: str) -> float:
        return self.classes[name].precision


def _greedy_match(truth_items, detected_items, dist_fn, tol):
    pairs = []
    for ti, t in enumerate(truth_items):
        for di, d in enumerate(detected_items):
            dist = dist_fn(t, d)
            if dist is not None and dist <= tol:
                pairs.append((dist, ti, di))
    pairs.sort(key=lambda p: (p[0], p[1], p[2]))
    used_t, used_d = set(), set()
    matches = []
    for dist, ti, di in pairs:
        if ti in used_t or di in used_d:
            continue
        used_t.add(ti)
        used_d.add(di)
        matches.append((ti, di, dist))
    return matches


def compare_to_truth(result, truth: GroundTruth, tol: MatchTolerances) -> ScoreCard:
    """Greedy bipartite matching of detected elements against ground truth.

    `result` is a pipeline result carrying slabs, storeys, walls, openings,
    and zones. Dimensional errors of the matched pairs are recorded per
    class.
    """
    classes = {}

    # slabs matched on bottom elevation
    def slab_dist(t, d):
        return abs(d.z_bottom - t[0])

    matches = _greedy_match(truth.slabs, result.slabs, slab_dist, tol.slab_z)
    errors = {
        "z": max((abs(result.slabs[di].z_bottom - truth.slabs[ti][0]) for ti, di, _ in matches), default=0.0),
        "thickness": max(
            (abs(result.slabs[di].thickness - truth.slabs[ti][1]) for ti, di, _ in matches), default=0.0
        ),
    }
    classes["slabs"] = ClassScore(len(truth.slabs), len(result.slabs), len(matches), errors)

    classes["storeys"] = ClassScore(
        len(truth.storeys), len(result.storeys),
        sum(
            1
            for (ft, cb), st in zip(truth.storeys, result.storeys)
            if abs(st.z_floor_top - ft) <= tol.slab_z and abs(st.z_ceiling_bottom - cb) <= tol.slab_z
        ),
    )

    # walls matched per storey on endpoint agreement
    flat_truth_walls = [w for group in truth.walls for w in group]

    def wall_dist(t, d):
        if d.storey_index != t.storey:
            return None
        e1 = max(
            float(np.linalg.norm(d.axis_start - t.a)),
            float(np.linalg.norm(d.axis_end - t.b)),
        )
        e2 = max(
            float(np.linalg.norm(d.axis_start - t.b)),
            float(np.linalg.norm(d.axis_end - t.a)),
        )
        return min(e1, e2)

    matches = _greedy_match(flat_truth_walls, result.walls, wall_dist, tol.wall_endpoint)
    errors = {
        "endpoint": max((m[2] for m in matches), default=0.0),
        "thickness": max(
            (abs(result.walls[di].thickness - flat_truth_walls[ti].thickness) for ti, di, _ in matches),
            default=0.0,
        ),
    }
    classes["walls"] = ClassScore(len(flat_truth_walls), len(result.walls), len(matches), errors)

    # openings matched on world center, kinds compared
    def opening_center(op: Opening):
        wall = result.wall_by_ref(op.wall_ref)
        storey = result.storeys[op.wall_ref[0]]
        c2 = wall.axis_start + wall.direction * (op.x_offset + op.width / 2.0)
        return np.array([c2[0], c2[1], storey.z_floor_top + op.sill + op.height / 2.0])

    def op_dist(t: GTOpening, d: Opening):
        return float(np.linalg.norm(opening_center(d) - t.center))

    matches = _greedy_match(truth.openings, result.openings, op_dist, tol.opening_center)
    kind_ok = sum(
        1
        for ti, di, _ in matches
        if (result.openings[di].kind == OpeningKind.DOOR) == (truth.openings[ti].kind == "door")
    )
    errors = {
        "center": max((m[2] for m in matches), default=0.0),
        "width": max(
            (abs(result.openings[di].width - truth.openings[ti].width) for ti, di, _ in matches), default=0.0
        ),
        "height": max(
            (abs(result.openings[di].height - truth.openings[ti].height) for ti, di, _ in matches), default=0.0
        ),
        "sill": max(
            (abs(result.openings[di].sill - truth.openings[ti].sill) for ti, di, _ in matches), default=0.0
        ),
        "kind_matches": kind_ok,
    }
    classes["openings"] = ClassScore(len(truth.openings), len(result.openings), len(matches), errors)

    # zones matched on centroid
    def zone_dist(t, d):
        if d.storey_index != t.storey:
            return None
        c_t = Polygon2D(t.polygon).centroid()
        return float(np.linalg.norm(d.boundary.centroid() - c_t))

    matches = _greedy_match(truth.zones, result.zones, zone_dist, tol.zone_center)
    errors = {
        "area_rel": max(
            (
                abs(result.zones[di].area - truth.zones[ti].area) / truth.zones[ti].area
                for ti, di, _ in matches
            ),
            default=0.0,
        )
    }
    classes["zones"] = ClassScore(len(truth.zones), len(result.zones), len(matches), errors)
    return ScoreCard(classes)
