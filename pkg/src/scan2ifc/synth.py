"""Synthetic building generator with exact ground truth.

Buildings are authored as per-storey room polygons at wall-axis level; the
generator derives the wall arrangement (shared edges become interior walls),
then samples every visible surface on a regular lattice: interior wall faces
per room, floors, and ceilings, with opening rectangles left void. The same
face set drives the point-to-model deviation metric, so a noise-free cloud
lies exactly on the ground-truth geometry.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cloud_io import PointCloud
from .geom2d import Polygon2D, offset_polygon, signed_area
from .openings import Opening, OpeningKind
from .slabs import Slab, SlabSource, Storey
from .walls import SurfaceSide, Wall, WallSurface
from .zones import Zone

_LINE_DECIMALS = 9


@dataclass
class RoomSpec:
    vertices: list  # CCW axis-level polygon
    wall_thickness: object = 0.3  # scalar or per-edge list


@dataclass
class OpeningSpec:
    wall: int  # index into the storey's ground-truth wall list
    x_offset: float
    width: float
    sill: float
    height: float
    kind: str  # "door" | "window"


@dataclass
class StoreySpec:
    height: float
    slab_thickness: float  # slab above this storey
    rooms: list = field(default_factory=list)
    openings: list = field(default_factory=list)


@dataclass
class BuildingSpec:
    storeys: list
    base_slab_thickness: float = 0.3
    point_spacing: float = 0.02
    noise_sigma: float = 0.0
    seed: int = 0

    def validate(self):
        if self.point_spacing <= 0:
            raise ValueError("point_spacing must be > 0")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.base_slab_thickness <= 0:
            raise ValueError("base_slab_thickness must be > 0")
        if not self.storeys:
            raise ValueError("building needs at least one storey")
        for s in self.storeys:
            if s.height <= 0 or s.slab_thickness <= 0:
                raise ValueError("storey heights and slab thicknesses must be > 0")
            if not s.rooms:
                raise ValueError("every storey needs at least one room")


@dataclass
class GTWall:
    storey: int
    a: np.ndarray
    b: np.ndarray
    thickness: float
    exterior: bool

    @property
    def direction(self):
        return (self.b - self.a) / np.linalg.norm(self.b - self.a)

    @property
    def length(self):
        return float(np.linalg.norm(self.b - self.a))

    @property
    def midpoint(self):
        return (self.a + self.b) / 2.0


@dataclass
class GTOpening:
    storey: int
    wall_index: int
    x_offset: float
    width: float
    sill: float
    height: float
    kind: str
    center: np.ndarray  # world (x, y, z)


@dataclass
class GTZone:
    storey: int
    polygon: np.ndarray
    area: float


@dataclass
class RectFace:
    """Planar rectangle in 3D with optional void rectangles (face-local u/v)."""

    origin: np.ndarray
    udir: np.ndarray
    vdir: np.ndarray
    ulen: float
    vlen: float
    voids: list = field(default_factory=list)


@dataclass
class HPolyFace:
    """Horizontal polygonal face at a fixed elevation."""

    polygon: np.ndarray
    z: float


@dataclass
class GroundTruth:
    slabs: list  # (z_bottom, thickness)
    storeys: list  # (floor_top, ceiling_bottom)
    walls: list  # per storey: list[GTWall]
    openings: list  # list[GTOpening]
    zones: list  # list[GTZone]
    faces: list  # sampled RectFace / HPolyFace records
    outline: np.ndarray | None = None  # building axis outline (bounding box)


def _line_key(a: np.ndarray, b: np.ndarray) -> tuple:
    d = b - a
    d = d / np.linalg.norm(d)
    if (d[0], d[1]) < (0.0, 0.0) or (abs(d[0]) < 1e-12 and d[1] < 0):
        d = -d
    n = np.array([-d[1], d[0]])
    c = float(a @ n)
    return (round(float(d[0]), _LINE_DECIMALS), round(float(d[1]), _LINE_DECIMALS), round(c, _LINE_DECIMALS))


def _storey_walls(rooms: list, storey: int) -> tuple[list, dict]:
    """Deduplicate room edges into junction-split ground-truth walls.

    Collinear edges are fragmented at every interval endpoint; fragments
    covered by two rooms are interior walls, single-coverage fragments are
    exterior. Returns the canonical wall list plus a room-edge -> wall-index
    map used when sampling faces.
    """
    by_line: dict = {}
    for ri, room in enumerate(rooms):
        verts = np.asarray(room.vertices, dtype=float)
        if signed_area(verts) < 0:
            raise ValueError("room polygons must be counter-clockwise")
        n = len(verts)
        ts = room.wall_thickness
        ts = [float(ts)] * n if np.isscalar(ts) else [float(t) for t in ts]
        if len(ts) != n:
            raise ValueError("wall_thickness list must match edge count")
        for k in range(n):
            a, b = verts[k], verts[(k + 1) % n]
            key = _line_key(a, b)
            by_line.setdefault(key, []).append((a, b, ts[k], (ri, k)))

    walls: list[GTWall] = []
    edge_map: dict = {}
    for key in sorted(by_line):
        edges = by_line[key]
        d = np.array([key[0], key[1]])
        base = edges[0][0]
        intervals = []
        for a, b, t, tag in edges:
            t0, t1 = float((a - base) @ d), float((b - base) @ d)
            intervals.append((min(t0, t1), max(t0, t1), t, tag))
        cuts = sorted({round(v, _LINE_DECIMALS) for lo, hi, _, _ in intervals for v in (lo, hi)})
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            mid = (lo + hi) / 2.0
            owners = [(t, tag) for l2, h2, t, tag in intervals if l2 - 1e-9 <= mid <= h2 + 1e-9]
            if not owners:
                continue
            if len(owners) > 2:
                raise ValueError("more than two rooms share a wall segment")
            thickness = max(t for t, _ in owners)
            a = base + lo * d
            b = base + hi * d
            if tuple(a) > tuple(b):
                a, b = b, a
            idx = len(walls)
            walls.append(GTWall(storey, a, b, thickness, exterior=len(owners) == 1))
            for _, tag in owners:
                edge_map.setdefault(tag, []).append(idx)
    return walls, edge_map


def _room_inset(room: RoomSpec) -> np.ndarray:
    verts = np.asarray(room.vertices, dtype=float)
    n = len(verts)
    ts = room.wall_thickness
    dists = [float(ts) / 2.0] * n if np.isscalar(ts) else [float(t) / 2.0 for t in ts]
    return offset_polygon(verts, dists)


def _lattice(length: float, spacing: float) -> np.ndarray:
    n = int(math.floor(length / spacing + 1e-9))
    return np.arange(n + 1) * spacing


_STAGGER = 0.6180339887498949  # golden-ratio row offset, keeps plan projections dense


def _staggered_rows(ulen: float, vlen: float, spacing: float):
    """Per-row u lattices with a deterministic fractional shift.

    A plain grid would project every column of a vertical face onto one plan
    position, leaving raster cells between them empty; staggering the rows
    reproduces how scan lines at different heights fill the plan densely.
    Points stay exactly on the face.
    """
    vs = _lattice(vlen, spacing)
    for j, v in enumerate(vs):
        frac = (j * _STAGGER) % 1.0
        n = int(math.floor(ulen / spacing - frac + 1e-9))
        if n < 0:
            us = np.array([0.0])
        else:
            us = (np.arange(n + 1) + frac) * spacing
        yield us, v


def build_truth(spec: BuildingSpec) -> GroundTruth:
    """Ground truth for a spec: arrangement, zones, openings, and face set."""
    spec.validate()
    slabs = [(-spec.base_slab_thickness, spec.base_slab_thickness)]
    storeys = []
    z = 0.0
    for st in spec.storeys:
        storeys.append((z, z + st.height))
        slabs.append((z + st.height, st.slab_thickness))
        z += st.height + st.slab_thickness

    gt_walls: list = []
    gt_openings: list = []
    gt_zones: list = []
    faces: list = []

    for si, st in enumerate(spec.storeys):
        floor_top, ceil_bottom = storeys[si]
        walls, edge_map = _storey_walls(st.rooms, si)
        gt_walls.append(walls)

        for os in st.openings:
            if not 0 <= os.wall < len(walls):
                raise ValueError(f"storey {si}: opening references wall {os.wall} of {len(walls)}")
            w = walls[os.wall]
            if os.x_offset < 0 or os.x_offset + os.width > w.length + 1e-9:
                raise ValueError(f"storey {si}: opening does not fit its wall")
            if os.sill < 0 or os.sill + os.height > st.height + 1e-9:
                raise ValueError(f"storey {si}: opening does not fit the storey height")
            center2 = w.a + w.direction * (os.x_offset + os.width / 2.0)
            center = np.array([center2[0], center2[1], floor_top + os.sill + os.height / 2.0])
            gt_openings.append(
                GTOpening(si, os.wall, os.x_offset, os.width, os.sill, os.height, os.kind, center)
            )

        for ri, room in enumerate(st.rooms):
            inner = _room_inset(room)
            gt_zones.append(GTZone(si, inner, abs(signed_area(inner))))
            verts = np.asarray(room.vertices, dtype=float)
            n = len(verts)
            for k in range(n):
                p0, p1 = inner[k], inner[(k + 1) % n]
                ud2 = p1 - p0
                ulen = float(np.linalg.norm(ud2))
                if ulen < 1e-9:
                    continue
                ud2 = ud2 / ulen
                voids = []
                for op in gt_openings:
                    if op.storey != si:
                        continue
                    w = walls[op.wall_index]
                    if _line_key(w.a, w.b) != _line_key(verts[k], verts[(k + 1) % n]):
                        continue
                    oa = w.a + w.direction * op.x_offset
                    ob = w.a + w.direction * (op.x_offset + op.width)
                    u0 = float((oa - p0) @ ud2)
                    u1 = float((ob - p0) @ ud2)
                    lo, hi = max(0.0, min(u0, u1)), min(ulen, max(u0, u1))
                    if hi - lo > 1e-9:
                        voids.append((lo, hi, op.sill, op.sill + op.height))
                faces.append(
                    RectFace(
                        origin=np.array([p0[0], p0[1], floor_top]),
                        udir=np.array([ud2[0], ud2[1], 0.0]),
                        vdir=np.array([0.0, 0.0, 1.0]),
                        ulen=ulen,
                        vlen=st.height,
                        voids=voids,
                    )
                )
            faces.append(HPolyFace(inner.copy(), floor_top))
            faces.append(HPolyFace(inner.copy(), ceil_bottom))

    all_xy = np.vstack([np.asarray(r.vertices, dtype=float) for st in spec.storeys for r in st.rooms])
    pad = max(max(np.ravel(r.wall_thickness).max() for st in spec.storeys for r in st.rooms), 0.1) / 2.0
    lo, hi = all_xy.min(axis=0) - pad, all_xy.max(axis=0) + pad
    outline = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])

    return GroundTruth(
        slabs=slabs,
        storeys=storeys,
        walls=gt_walls,
        openings=gt_openings,
        zones=gt_zones,
        faces=faces,
        outline=outline,
    )


def generate(spec: BuildingSpec) -> tuple[PointCloud, GroundTruth]:
    """Sample the building surfaces into a cloud and emit exact ground truth."""
    truth = build_truth(spec)
    rng = np.random.default_rng(spec.seed)
    spacing = spec.point_spacing

    # sample all faces on the spacing lattice
    chunks = []
    for face in truth.faces:
        if isinstance(face, RectFace):
            uu_rows = []
            vv_rows = []
            for us, v in _staggered_rows(face.ulen, face.vlen, spacing):
                uu_rows.append(us)
                vv_rows.append(np.full(len(us), v))
            uu = np.concatenate(uu_rows)
            vv = np.concatenate(vv_rows)
            keep = np.ones(len(uu), dtype=bool)
            for u0, u1, v0, v1 in face.voids:
                keep &= ~((uu > u0) & (uu < u1) & (vv > v0) & (vv < v1))
            pts = (
                face.origin[None, :]
                + uu[keep, None] * face.udir[None, :]
                + vv[keep, None] * face.vdir[None, :]
            )
            chunks.append(pts)
        else:
            poly = Polygon2D(face.polygon)
            lo = face.polygon.min(axis=0)
            hi = face.polygon.max(axis=0)
            xs = lo[0] + _lattice(hi[0] - lo[0], spacing)
            ys = lo[1] + _lattice(hi[1] - lo[1], spacing)
            xx, yy = np.meshgrid(xs, ys, indexing="ij")
            grid = np.column_stack([xx.ravel(), yy.ravel()])
            inside = poly.contains(grid)
            pts = np.column_stack([grid[inside], np.full(inside.sum(), face.z)])
            chunks.append(pts)
    cloud_pts = np.vstack(chunks)
    if spec.noise_sigma > 0:
        cloud_pts = cloud_pts + rng.normal(0.0, spec.noise_sigma, cloud_pts.shape)
    return PointCloud(cloud_pts), truth


def ground_truth_elements(truth: GroundTruth):
    """Ground truth as pipeline-level elements, ready for the IFC builder."""
    slabs = []
    for k, (z_bottom, thickness) in enumerate(truth.slabs):
        source = SlabSource.MANUAL_BOTTOM if k == 0 else (
            SlabSource.MANUAL_TOP if k == len(truth.slabs) - 1 else SlabSource.PAIRED
        )
        slabs.append(Slab(Polygon2D(truth.outline), z_bottom, thickness, source))
    storeys = [
        Storey(i, floor_top, ceil_bottom, PointCloud(np.zeros((0, 3))))
        for i, (floor_top, ceil_bottom) in enumerate(truth.storeys)
    ]
    walls = []
    for si, group in enumerate(truth.walls):
        height = truth.storeys[si][1] - truth.storeys[si][0]
        for w in group:
            d = w.direction
            nrm = np.array([-d[1], d[0]])
            surfaces = (
                WallSurface(segment=_seg(w.a + nrm * w.thickness / 2, w.b + nrm * w.thickness / 2)),
                WallSurface(
                    segment=_seg(w.a - nrm * w.thickness / 2, w.b - nrm * w.thickness / 2),
                    side=SurfaceSide.VIRTUAL if w.exterior else SurfaceSide.REAL,
                ),
            )
            walls.append(Wall(w.a, w.b, w.thickness, height, si, surfaces, exterior=w.exterior))
    openings = []
    for op in truth.openings:
        openings.append(
            Opening(
                wall_ref=(op.storey, op.wall_index),
                x_offset=op.x_offset,
                width=op.width,
                sill=op.sill,
                height=op.height,
                kind=OpeningKind.DOOR if op.kind == "door" else OpeningKind.WINDOW,
            )
        )
    zones = []
    for zi, z in enumerate(truth.zones):
        height = truth.storeys[z.storey][1] - truth.storeys[z.storey][0]
        zones.append(Zone(Polygon2D(z.polygon), z.storey, height, name=f"Zone {z.storey}.{zi}"))
    return slabs, storeys, walls, openings, zones


def _seg(a, b):
    from .geom2d import Segment2D

    return Segment2D(a, b)


def two_room_spec(rotated_wing: bool = False, spacing: float = 0.02, noise: float = 0.0,
                  seed: int = 0) -> BuildingSpec:
    """Reference 2-storey, 2-rooms-per-storey building used across the tests.

    Room A is a 4x6 m rectangle; room B shares the dividing wall and is
    either the mirrored rectangle or a wing whose free walls run at 30
    degrees. Each storey has a door in the divider; storey 0 has a window in
    room A's north wall, storey 1 in room B's south wall.
    """
    room_a = RoomSpec(vertices=[(0.0, 0.0), (4.0, 0.0), (4.0, 6.0), (0.0, 6.0)])
    if rotated_wing:
        c30, s30 = math.cos(math.radians(30.0)), math.sin(math.radians(30.0))
        w = 4.0
        room_b = RoomSpec(
            vertices=[(4.0, 0.0), (4.0 + w * c30, w * s30), (4.0 + w * c30, 6.0 + w * s30), (4.0, 6.0)]
        )
    else:
        room_b = RoomSpec(vertices=[(4.0, 0.0), (8.0, 0.0), (8.0, 6.0), (4.0, 6.0)])

    def storey(openings):
        return StoreySpec(height=2.7, slab_thickness=0.3, rooms=[room_a, room_b], openings=openings)

    spec = BuildingSpec(
        storeys=[storey([]), storey([])],
        base_slab_thickness=0.3,
        point_spacing=spacing,
        noise_sigma=noise,
        seed=seed,
    )
    # resolve wall indices from the generated arrangement
    for si in (0, 1):
        walls, _ = _storey_walls(spec.storeys[si].rooms, si)
        divider = _find_wall(walls, interior=True)
        spec.storeys[si].openings.append(
            OpeningSpec(wall=divider, x_offset=2.0 + si, width=0.9, sill=0.0, height=2.0, kind="door")
        )
    walls0, _ = _storey_walls(spec.storeys[0].rooms, 0)
    north_a = _wall_at(walls0, (2.0, 6.0))
    spec.storeys[0].openings.append(
        OpeningSpec(wall=north_a, x_offset=1.2, width=1.2, sill=0.9, height=1.2, kind="window")
    )
    walls1, _ = _storey_walls(spec.storeys[1].rooms, 1)
    if rotated_wing:
        c30, s30 = math.cos(math.radians(30.0)), math.sin(math.radians(30.0))
        south_b = _wall_at(walls1, (4.0 + 2.0 * c30, 2.0 * s30))
    else:
        south_b = _wall_at(walls1, (6.0, 0.0))
    spec.storeys[1].openings.append(
        OpeningSpec(wall=south_b, x_offset=1.4, width=1.2, sill=0.9, height=1.2, kind="window")
    )
    return spec


def load_building_spec(path) -> BuildingSpec:
    """Read a building spec from TOML.

    Layout: a [building] table (seed, point_spacing, noise_sigma,
    base_slab_thickness), then [[storey]] tables each holding height,
    slab_thickness, [[storey.room]] tables (vertices, wall_thickness) and
    [[storey.opening]] tables (wall, x_offset, width, sill, height, kind).
    """
    import sys
    from pathlib import Path

    if sys.version_info >= (3, 11):
        import tomllib
    else:
        import tomli as tomllib

    data = tomllib.loads(Path(path).read_text())
    b = data.get("building", {})
    storeys = []
    for st in data.get("storey", []):
        rooms = [
            RoomSpec(vertices=[tuple(map(float, v)) for v in r["vertices"]],
                     wall_thickness=r.get("wall_thickness", 0.3))
            for r in st.get("room", [])
        ]
        openings = [
            OpeningSpec(
                wall=int(o["wall"]),
                x_offset=float(o["x_offset"]),
                width=float(o["width"]),
                sill=float(o.get("sill", 0.0)),
                height=float(o["height"]),
                kind=str(o.get("kind", "door")),
            )
            for o in st.get("opening", [])
        ]
        storeys.append(
            StoreySpec(height=float(st["height"]), slab_thickness=float(st["slab_thickness"]),
                       rooms=rooms, openings=openings)
        )
    spec = BuildingSpec(
        storeys=storeys,
        base_slab_thickness=float(b.get("base_slab_thickness", 0.3)),
        point_spacing=float(b.get("point_spacing", 0.02)),
        noise_sigma=float(b.get("noise_sigma", 0.0)),
        seed=int(b.get("seed", 0)),
    )
    spec.validate()
    return spec


def dump_building_spec(spec: BuildingSpec) -> str:
    """Serialize a spec back to the TOML layout load_building_spec reads."""
    lines = [
        "[building]",
        f"seed = {spec.seed}",
        f"point_spacing = {spec.point_spacing!r}",
        f"noise_sigma = {spec.noise_sigma!r}",
        f"base_slab_thickness = {spec.base_slab_thickness!r}",
    ]
    for st in spec.storeys:
        lines += ["", "[[storey]]", f"height = {st.height!r}", f"slab_thickness = {st.slab_thickness!r}"]
        for room in st.rooms:
            verts = ", ".join(f"[{float(x)!r}, {float(y)!r}]" for x, y in room.vertices)
            lines += ["", "[[storey.room]]", f"vertices = [{verts}]"]
            t = room.wall_thickness
            if np.isscalar(t):
                lines.append(f"wall_thickness = {float(t)!r}")
            else:
                lines.append("wall_thickness = [" + ", ".join(repr(float(v)) for v in t) + "]")
        for op in st.openings:
            lines += [
                "",
                "[[storey.opening]]",
                f"wall = {op.wall}",
                f"x_offset = {op.x_offset!r}",
                f"width = {op.width!r}",
                f"sill = {op.sill!r}",
                f"height = {op.height!r}",
                f'kind = "{op.kind}"',
            ]
    return "\n".join(lines) + "\n"


def random_building_spec(rng) -> BuildingSpec:
    """Random grid-of-rooms building with valid openings, for fuzz tests."""
    nx = int(rng.integers(1, 4))
    ny = int(rng.integers(1, 3))
    xs = np.concatenate([[0.0], np.cumsum(rng.uniform(3.0, 6.0, nx))])
    ys = np.concatenate([[0.0], np.cumsum(rng.uniform(3.0, 6.0, ny))])
    t = float(rng.uniform(0.15, 0.4))
    rooms = [
        RoomSpec(vertices=[(xs[i], ys[j]), (xs[i + 1], ys[j]), (xs[i + 1], ys[j + 1]), (xs[i], ys[j + 1])],
                 wall_thickness=t)
        for j in range(ny)
        for i in range(nx)
    ]
    n_storeys = int(rng.integers(1, 4))
    storeys = []
    for si in range(n_storeys):
        height = float(rng.uniform(2.4, 3.2))
        st = StoreySpec(height=height, slab_thickness=float(rng.uniform(0.2, 0.4)), rooms=rooms)
        walls, _ = _storey_walls(rooms, si)
        for wi, w in enumerate(walls):
            if w.length < 2.0 or rng.random() < 0.4:
                continue
            if w.exterior:
                width = float(rng.uniform(0.8, min(1.6, w.length - 1.2)))
                sill = float(rng.uniform(0.8, 1.1))
                h = float(rng.uniform(0.8, min(1.4, height - sill - 0.2)))
                kind = "window"
            else:
                width = float(rng.uniform(0.8, min(1.1, w.length - 1.2)))
                sill = 0.0
                h = float(rng.uniform(1.9, min(2.2, height - 0.2)))
                kind = "door"
            x_off = float(rng.uniform(0.5, w.length - width - 0.5))
            st.openings.append(OpeningSpec(wall=wi, x_offset=x_off, width=width, sill=sill,
                                           height=h, kind=kind))
        storeys.append(st)
    return BuildingSpec(storeys=storeys, base_slab_thickness=float(rng.uniform(0.2, 0.4)),
                        point_spacing=0.05, seed=int(rng.integers(0, 2**31)))


def _find_wall(walls: list, interior: bool) -> int:
    for i, w in enumerate(walls):
        if w.exterior == (not interior):
            return i
    raise ValueError("no matching wall found")


def _wall_at(walls: list, midpoint) -> int:
    mp = np.asarray(midpoint, dtype=float)
    dists = [float(np.linalg.norm(w.midpoint - mp)) for w in walls]
    return int(np.argmin(dists))
