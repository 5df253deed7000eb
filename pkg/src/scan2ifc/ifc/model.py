"""IFC4 entity graph construction from detected building elements.

The model is an ordered map of #id -> (ENTITY_TYPE, attribute tuple) plus
header metadata; serialization lives in step.py. Attribute values use small
marker types (Ref, EnumVal, Typed) so the writer can render them exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import IfcBuildError
from ..openings import Opening, OpeningKind
from ..slabs import Slab, Storey
from ..walls import Wall
from ..zones import Zone
from .guids import deterministic_guid, random_guid

SCHEMA = "IFC4"
VIEW_DEFINITION = "ViewDefinition [DesignTransferView_V1.0]"
APP_NAME = "scan2ifc"
APP_VERSION = "0.1.0"


@dataclass(frozen=True)
class Ref:
    id: int


@dataclass(frozen=True)
class EnumVal:
    name: str


class _Star:
    """Derived attribute placeholder, rendered as '*'."""

    def __repr__(self):
        return "*"


STAR = _Star()


@dataclass(frozen=True)
class Typed:
    type_name: str
    value: object


@dataclass
class ProjectMeta:
    project_name: str = "Unnamed project"
    long_name: str = ""
    version: str = ""
    author_name: str = ""
    author_surname: str = ""
    organization: str = ""
    building_name: str = "Building"
    building_type: str = ""
    building_phase: str = ""
    site_latitude: float = 0.0
    site_longitude: float = 0.0
    site_elevation: float = 0.0
    material: str = "Concrete"

    def validate(self):
        if not -90 <= self.site_latitude <= 90:
            raise IfcBuildError("site_latitude out of [-90, 90]")
        if not -180 <= self.site_longitude <= 180:
            raise IfcBuildError("site_longitude out of [-180, 180]")


class IfcModel:
    def __init__(self, meta: ProjectMeta, seed: int = 0, deterministic: bool = True):
        meta.validate()
        self.meta = meta
        self.seed = seed
        self.deterministic = deterministic
        self.entities: dict[int, tuple] = {}
        self._next_id = 1
        self._guid_count = 0

    def add(self, type_name: str, *args) -> Ref:
        eid = self._next_id
        self._next_id += 1
        self.entities[eid] = (type_name.upper(), args)
        return Ref(eid)

    def guid(self, kind: str) -> str:
        self._guid_count += 1
        if self.deterministic:
            return deterministic_guid(self.seed, kind, self._guid_count)
        return random_guid()

    def count_of(self, type_name: str) -> int:
        t = type_name.upper()
        return sum(1 for name, _ in self.entities.values() if name == t)


def _dms(angle: float) -> list:
    """Degrees as an IfcCompoundPlaneAngleMeasure (deg, min, sec, millionth-sec)."""
    sign = -1 if angle < 0 else 1
    a = abs(angle)
    deg = int(a)
    rem = (a - deg) * 60
    minutes = int(rem)
    rem = (rem - minutes) * 60
    seconds = int(rem)
    millionths = int(round((rem - seconds) * 1e6))
    return [sign * deg, sign * minutes, sign * seconds, sign * millionths]


def _axis2d(model: IfcModel, xy, direction=None) -> Ref:
    loc = model.add("IFCCARTESIANPOINT", [float(xy[0]), float(xy[1])])
    refdir = model.add("IFCDIRECTION", [float(direction[0]), float(direction[1])]) if direction is not None else None
    return model.add("IFCAXIS2PLACEMENT2D", loc, refdir)


def _axis3d(model: IfcModel, xyz, axis=None, refdir=None) -> Ref:
    loc = model.add("IFCCARTESIANPOINT", [float(v) for v in xyz])
    ax = model.add("IFCDIRECTION", [float(v) for v in axis]) if axis is not None else None
    rd = model.add("IFCDIRECTION", [float(v) for v in refdir]) if refdir is not None else None
    return model.add("IFCAXIS2PLACEMENT3D", loc, ax, rd)


def _local_placement(model: IfcModel, relative_to, xyz, axis=None, refdir=None) -> Ref:
    return model.add("IFCLOCALPLACEMENT", relative_to, _axis3d(model, xyz, axis, refdir))


def _polyline_profile(model: IfcModel, vertices) -> Ref:
    pts = [model.add("IFCCARTESIANPOINT", [float(x), float(y)]) for x, y in vertices]
    pts.append(pts[0])  # closed polyline repeats the first point
    poly = model.add("IFCPOLYLINE", pts)
    return model.add("IFCARBITRARYCLOSEDPROFILEDEF", EnumVal("AREA"), None, poly)


def _extruded_solid(model: IfcModel, profile, position, depth) -> Ref:
    direction = model.add("IFCDIRECTION", [0.0, 0.0, 1.0])
    return model.add("IFCEXTRUDEDAREASOLID", profile, position, direction, float(depth))


def _body_shape(model: IfcModel, context, solid) -> Ref:
    rep = model.add("IFCSHAPEREPRESENTATION", context, "Body", "SweptSolid", [solid])
    return model.add("IFCPRODUCTDEFINITIONSHAPE", None, None, [rep])


def build_model(
    slabs: list[Slab],
    storeys: list[Storey],
    walls: list[Wall],
    openings: list[Opening],
    zones: list[Zone],
    meta: ProjectMeta,
    seed: int = 0,
    deterministic: bool = True,
) -> IfcModel:
    """Assemble the full entity graph for the detected building.

    Hierarchy: project -> site -> building -> storeys; slabs/walls are
    contained in storeys, spaces aggregate under them, and each opening voids
    its parent wall. Units are meters (degrees for plane angles).
    """
    import time

    model = IfcModel(meta, seed=seed, deterministic=deterministic)
    timestamp = 0 if deterministic else int(time.time())

    # ownership / application boilerplate
    person = model.add("IFCPERSON", None, meta.author_surname or None, meta.author_name or None,
                       None, None, None, None, None)
    org = model.add("IFCORGANIZATION", None, meta.organization or "unknown", None, None, None)
    person_org = model.add("IFCPERSONANDORGANIZATION", person, org, None)
    app = model.add("IFCAPPLICATION", org, APP_VERSION, APP_NAME, APP_NAME)
    owner = model.add("IFCOWNERHISTORY", person_org, app, None, EnumVal("ADDED"), None, None, None,
                      timestamp)

    # units: metre, m2, m3, degree
    length_u = model.add("IFCSIUNIT", STAR, EnumVal("LENGTHUNIT"), None, EnumVal("METRE"))
    area_u = model.add("IFCSIUNIT", STAR, EnumVal("AREAUNIT"), None, EnumVal("SQUARE_METRE"))
    vol_u = model.add("IFCSIUNIT", STAR, EnumVal("VOLUMEUNIT"), None, EnumVal("CUBIC_METRE"))
    rad_u = model.add("IFCSIUNIT", STAR, EnumVal("PLANEANGLEUNIT"), None, EnumVal("RADIAN"))
    dim_exp = model.add("IFCDIMENSIONALEXPONENTS", 0, 0, 0, 0, 0, 0, 0)
    deg_measure = model.add("IFCMEASUREWITHUNIT", Typed("IFCPLANEANGLEMEASURE", math.pi / 180.0), rad_u)
    degree_u = model.add("IFCCONVERSIONBASEDUNIT", dim_exp, EnumVal("PLANEANGLEUNIT"), "DEGREE", deg_measure)
    units = model.add("IFCUNITASSIGNMENT", [length_u, area_u, vol_u, degree_u])

    world_cs = _axis3d(model, (0.0, 0.0, 0.0))
    context = model.add("IFCGEOMETRICREPRESENTATIONCONTEXT", None, "Model", 3, 1e-8, world_cs, None)

    project = model.add(
        "IFCPROJECT", model.guid("project"), owner, meta.project_name,
        None, None, meta.long_name or None, meta.building_phase or None, [context], units,
    )

    site_placement = _local_placement(model, None, (0.0, 0.0, 0.0))
    site = model.add(
        "IFCSITE", model.guid("site"), owner, "Site", None, None, site_placement, None, None,
        EnumVal("ELEMENT"), _dms(meta.site_latitude), _dms(meta.site_longitude),
        float(meta.site_elevation), None, None,
    )
    building_placement = _local_placement(model, site_placement, (0.0, 0.0, 0.0))
    building = model.add(
        "IFCBUILDING", model.guid("building"), owner, meta.building_name, None,
        meta.building_type or None, building_placement, None, None, EnumVal("ELEMENT"),
        None, None, None,
    )

    storey_refs = []
    storey_placements = []
    for st in storeys:
        placement = _local_placement(model, building_placement, (0.0, 0.0, float(st.z_floor_top)))
        ref = model.add(
            "IFCBUILDINGSTOREY", model.guid("storey"), owner, f"Storey {st.index}", None, None,
            placement, None, None, EnumVal("ELEMENT"), float(st.z_floor_top),
        )
        storey_refs.append(ref)
        storey_placements.append(placement)

    def storey_for_slab(k: int) -> int:
        # ground slab belongs to storey 0, others to the storey they support
        return min(k, len(storeys) - 1) if storeys else 0

    material = model.add("IFCMATERIAL", meta.material, None, None)
    element_refs = []
    contained: dict[int, list] = {i: [] for i in range(len(storeys))}

    slab_refs = []
    for k, slab in enumerate(slabs):
        if slab.footprint is None:
            raise IfcBuildError(f"slab {k} has no footprint")
        st_idx = storey_for_slab(k)
        st = storeys[st_idx] if storeys else None
        base_z = st.z_floor_top if st else 0.0
        placement = _local_placement(
            model, storey_placements[st_idx] if storeys else None,
            (0.0, 0.0, float(slab.z_bottom - base_z)),
        )
        profile = _polyline_profile(model, slab.footprint.vertices)
        solid = _extruded_solid(model, profile, _axis3d(model, (0.0, 0.0, 0.0)), slab.thickness)
        ref = model.add(
            "IFCSLAB", model.guid("slab"), owner, f"Slab {k}", None, None, placement,
            _body_shape(model, context, solid), None, EnumVal("FLOOR"),
        )
        slab_refs.append(ref)
        element_refs.append(ref)
        contained[st_idx].append(ref)

    wall_refs = []
    for k, wall in enumerate(walls):
        d = wall.direction
        placement = _local_placement(
            model, storey_placements[wall.storey_index],
            (float(wall.axis_start[0]), float(wall.axis_start[1]), 0.0),
            axis=(0.0, 0.0, 1.0), refdir=(float(d[0]), float(d[1]), 0.0),
        )
        profile = model.add(
            "IFCRECTANGLEPROFILEDEF", EnumVal("AREA"), None,
            _axis2d(model, (wall.length / 2.0, 0.0)), float(wall.length), float(wall.thickness),
        )
        solid = _extruded_solid(model, profile, _axis3d(model, (0.0, 0.0, 0.0)), wall.height)
        ref = model.add(
            "IFCWALL", model.guid("wall"), owner, f"Wall {wall.storey_index}.{k}", None, None,
            placement, _body_shape(model, context, solid), None, EnumVal("SOLIDWALL"),
        )
        wall_refs.append((ref, placement))
        element_refs.append(ref)
        contained[wall.storey_index].append(ref)

    wall_index_by_ref: dict[tuple, int] = {}
    for k, wall in enumerate(walls):
        wall_index_by_ref[(wall.storey_index, sum(1 for w in walls[:k] if w.storey_index == wall.storey_index))] = k

    opening_refs = []
    for k, op in enumerate(openings):
        if op.wall_ref not in wall_index_by_ref:
            raise IfcBuildError(f"opening {k} references unknown wall {op.wall_ref}")
        widx = wall_index_by_ref[op.wall_ref]
        wall = walls[widx]
        wall_ref_entity, wall_placement = wall_refs[widx]
        placement = _local_placement(model, wall_placement, (0.0, 0.0, 0.0))
        profile = model.add(
            "IFCRECTANGLEPROFILEDEF", EnumVal("AREA"), None,
            _axis2d(model, (op.x_offset + op.width / 2.0, 0.0)), float(op.width), float(wall.thickness),
        )
        solid = _extruded_solid(
            model, profile, _axis3d(model, (0.0, 0.0, float(op.sill))), op.height,
        )
        kind_name = "Door opening" if op.kind == OpeningKind.DOOR else "Window opening"
        ref = model.add(
            "IFCOPENINGELEMENT", model.guid("opening"), owner, kind_name, None, None, placement,
            _body_shape(model, context, solid), None, EnumVal("OPENING"),
        )
        model.add(
            "IFCRELVOIDSELEMENT", model.guid("voids"), owner, None, None, wall_ref_entity, ref,
        )
        opening_refs.append(ref)
        element_refs.append(ref)

    space_refs = []
    spaces_by_storey: dict[int, list] = {i: [] for i in range(len(storeys))}
    for k, zone in enumerate(zones):
        if zone.boundary.area <= 0:
            raise IfcBuildError(f"zone {k} has a degenerate polygon")
        placement = _local_placement(model, storey_placements[zone.storey_index], (0.0, 0.0, 0.0))
        profile = _polyline_profile(model, zone.boundary.vertices)
        solid = _extruded_solid(model, profile, _axis3d(model, (0.0, 0.0, 0.0)), zone.height)
        ref = model.add(
            "IFCSPACE", model.guid("space"), owner, zone.name or f"Zone {k}", None, None,
            placement, _body_shape(model, context, solid), None, EnumVal("ELEMENT"),
            EnumVal("SPACE"), None,
        )
        space_refs.append(ref)
        element_refs.append(ref)
        spaces_by_storey[zone.storey_index].append(ref)

    # spatial structure
    model.add("IFCRELAGGREGATES", model.guid("rel"), owner, None, None, project, [site])
    model.add("IFCRELAGGREGATES", model.guid("rel"), owner, None, None, site, [building])
    if storey_refs:
        model.add("IFCRELAGGREGATES", model.guid("rel"), owner, None, None, building, storey_refs)
    for i, sref in enumerate(storey_refs):
        if contained[i]:
            model.add(
                "IFCRELCONTAINEDINSPATIALSTRUCTURE", model.guid("rel"), owner, None, None,
                contained[i], sref,
            )
        if spaces_by_storey[i]:
            model.add("IFCRELAGGREGATES", model.guid("rel"), owner, None, None, sref, spaces_by_storey[i])
    if slab_refs or wall_refs:
        model.add(
            "IFCRELASSOCIATESMATERIAL", model.guid("rel"), owner, None, None,
            slab_refs + [r for r, _ in wall_refs], material,
        )
    return model
