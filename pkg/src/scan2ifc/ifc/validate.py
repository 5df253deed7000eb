"""Structural self-validation and geometry re-derivation for STEP output.

The parser here is intentionally small: it reads the subset of ISO-10303-21
this tool emits (plus arbitrary entity payloads) well enough to resolve
references, count instances, and rebuild extruded solids from the file's own
numbers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class PRef:
    id: int


@dataclass(frozen=True)
class PEnum:
    name: str


@dataclass(frozen=True)
class PTyped:
    type_name: str
    value: object


@dataclass
class Entity:
    id: int
    type_name: str
    args: list


@dataclass
class Violation:
    kind: str
    message: str
    entity_id: int | None = None

    def __str__(self):
        eid = f" (#{self.entity_id})" if self.entity_id is not None else ""
        return f"{self.kind}: {self.message}{eid}"


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)
    entity_count: int = 0
    schema: str = ""

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, kind, message, entity_id=None):
        self.violations.append(Violation(kind, message, entity_id))


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message):
        line = self.text.count("\n", 0, self.pos) + 1
        raise SyntaxError(f"line {line}: {message}")

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos] in " \t\r\n":
            self.pos += 1

    def expect(self, ch):
        self.skip_ws()
        if self.pos >= len(self.text) or self.text[self.pos] != ch:
            self.error(f"expected {ch!r}")
        self.pos += 1

    def parse_string(self) -> str:
        # assumes opening quote consumed
        out = []
        t = self.text
        while True:
            if self.pos >= len(t):
                self.error("unterminated string")
            ch = t[self.pos]
            if ch == "'":
                if self.pos + 1 < len(t) and t[self.pos + 1] == "'":
                    out.append("'")
                    self.pos += 2
                    continue
                self.pos += 1
                return "".join(out)
            out.append(ch)
            self.pos += 1

    def parse_value(self):
        self.skip_ws()
        t = self.text
        if self.pos >= len(t):
            self.error("unexpected end of input")
        ch = t[self.pos]
        if ch == "$":
            self.pos += 1
            return None
        if ch == "*":
            self.pos += 1
            return PEnum("*")
        if ch == "#":
            self.pos += 1
            start = self.pos
            while self.pos < len(t) and t[self.pos].isdigit():
                self.pos += 1
            if start == self.pos:
                self.error("bad entity reference")
            return PRef(int(t[start : self.pos]))
        if ch == "'":
            self.pos += 1
            return self.parse_string()
        if ch == ".":
            end = t.find(".", self.pos + 1)
            if end < 0:
                self.error("unterminated enumeration")
            name = t[self.pos + 1 : end]
            self.pos = end + 1
            return PEnum(name)
        if ch == "(":
            self.pos += 1
            items = []
            self.skip_ws()
            if self.pos < len(t) and t[self.pos] == ")":
                self.pos += 1
                return items
            while True:
                items.append(self.parse_value())
                self.skip_ws()
                if self.pos < len(t) and t[self.pos] == ",":
                    self.pos += 1
                    continue
                self.expect(")")
                return items
        if ch.isalpha():
            start = self.pos
            while self.pos < len(t) and (t[self.pos].isalnum() or t[self.pos] == "_"):
                self.pos += 1
            name = t[start : self.pos]
            self.expect("(")
            self.pos -= 1
            inner = self.parse_value()  # the '(' branch
            value = inner[0] if isinstance(inner, list) and len(inner) == 1 else inner
            return PTyped(name.upper(), value)
        # number
        start = self.pos
        while self.pos < len(t) and t[self.pos] in "+-0123456789.eEdD":
            self.pos += 1
        token = t[start : self.pos]
        if not token:
            self.error(f"unexpected character {ch!r}")
        try:
            if any(c in token for c in ".eEdD"):
                return float(token.replace("D", "E").replace("d", "e"))
            return int(token)
        except ValueError:
            self.error(f"bad numeric literal {token!r}")


def parse_step(text: str) -> tuple[dict, str, list]:
    """Parse a STEP file into {id: Entity}; returns (entities, schema, errors)."""
    errors = []
    stripped = text.strip()
    if not stripped.startswith("ISO-10303-21;"):
        errors.append("missing ISO-10303-21 header")
    if not stripped.endswith("END-ISO-10303-21;"):
        errors.append("missing END-ISO-10303-21 terminator")

    schema = ""
    if "FILE_SCHEMA" in text:
        p = _Parser(text)
        p.pos = text.index("FILE_SCHEMA") + len("FILE_SCHEMA")
        try:
            val = p.parse_value()
            if isinstance(val, list) and val and isinstance(val[0], list) and val[0]:
                schema = str(val[0][0])
            elif isinstance(val, list) and val:
                schema = str(val[0])
        except SyntaxError as exc:
            errors.append(f"bad FILE_SCHEMA: {exc}")
    else:
        errors.append("missing FILE_SCHEMA")

    entities: dict[int, Entity] = {}
    data_start = text.find("DATA;")
    data_end = text.find("ENDSEC;", data_start) if data_start >= 0 else -1
    if data_start < 0:
        errors.append("missing DATA section")
        return entities, schema, errors
    body = text[data_start + 5 : data_end if data_end >= 0 else len(text)]
    p = _Parser(body)
    while True:
        p.skip_ws()
        if p.pos >= len(body):
            break
        try:
            p.expect("#")
            start = p.pos
            while p.pos < len(body) and body[p.pos].isdigit():
                p.pos += 1
            eid = int(body[start : p.pos])
            p.expect("=")
            p.skip_ws()
            start = p.pos
            while p.pos < len(body) and (body[p.pos].isalnum() or body[p.pos] == "_"):
                p.pos += 1
            type_name = body[start : p.pos].upper()
            p.expect("(")
            p.pos -= 1
            args = p.parse_value()
            p.expect(";")
            if eid in entities:
                errors.append(f"duplicate entity id #{eid}")
            entities[eid] = Entity(eid, type_name, args)
        except SyntaxError as exc:
            errors.append(str(exc))
            break
    return entities, schema, errors


def _collect_refs(value, out: list):
    if isinstance(value, PRef):
        out.append(value.id)
    elif isinstance(value, list):
        for v in value:
            _collect_refs(v, out)
    elif isinstance(value, PTyped):
        _collect_refs(value.value, out)


def validate_step(path) -> ValidationReport:
    """Check our structural invariants on a STEP file.

    Envelope, IFC4 schema, resolvable references, exactly one IfcProject,
    one IfcRelVoidsElement per opening element, and a complete containment
    chain up to the project for every building element.
    """
    report = ValidationReport()
    try:
        text = Path(path).read_text(encoding="ascii", errors="replace")
    except OSError as exc:
        report.add("io", str(exc))
        return report
    entities, schema, errors = parse_step(text)
    for err in errors:
        report.add("syntax", err)
    report.entity_count = len(entities)
    report.schema = schema
    if schema != "IFC4":
        report.add("schema", f"schema is {schema!r}, expected 'IFC4'")

    for ent in entities.values():
        refs: list = []
        _collect_refs(ent.args, refs)
        for rid in refs:
            if rid not in entities:
                report.add("unresolved reference", f"#{rid} referenced but not defined", ent.id)

    projects = [e for e in entities.values() if e.type_name == "IFCPROJECT"]
    if len(projects) == 0:
        report.add("project", "no IfcProject instance")
    elif len(projects) > 1:
        report.add("project", f"multiple IfcProject instances ({len(projects)})")

    voids_by_opening: dict[int, int] = {}
    for ent in entities.values():
        if ent.type_name == "IFCRELVOIDSELEMENT" and len(ent.args) >= 6:
            target = ent.args[5]
            if isinstance(target, PRef):
                voids_by_opening[target.id] = voids_by_opening.get(target.id, 0) + 1
    for ent in entities.values():
        if ent.type_name == "IFCOPENINGELEMENT":
            n = voids_by_opening.get(ent.id, 0)
            if n != 1:
                report.add("voids", f"opening has {n} IfcRelVoidsElement relations, expected 1", ent.id)

    # containment chain: element -> storey -> ... -> project
    parent: dict[int, int] = {}
    for ent in entities.values():
        if ent.type_name == "IFCRELAGGREGATES" and len(ent.args) >= 6:
            relating, related = ent.args[4], ent.args[5]
            if isinstance(relating, PRef) and isinstance(related, list):
                for r in related:
                    if isinstance(r, PRef):
                        parent[r.id] = relating.id
        if ent.type_name == "IFCRELCONTAINEDINSPATIALSTRUCTURE" and len(ent.args) >= 6:
            elements, structure = ent.args[4], ent.args[5]
            if isinstance(structure, PRef) and isinstance(elements, list):
                for r in elements:
                    if isinstance(r, PRef):
                        parent[r.id] = structure.id
    project_ids = {e.id for e in projects}
    element_types = {"IFCWALL", "IFCSLAB", "IFCSPACE", "IFCBUILDINGSTOREY", "IFCBUILDING", "IFCSITE"}
    for ent in entities.values():
        if ent.type_name not in element_types:
            continue
        cur = ent.id
        seen = set()
        while cur in parent and cur not in seen:
            seen.add(cur)
            cur = parent[cur]
        if cur not in project_ids:
            report.add("containment", f"{ent.type_name} not linked to the project", ent.id)
    return report


# ---------------------------------------------------------------------------
# geometry re-derivation


@dataclass
class SolidRecord:
    type_name: str  # IFCWALL / IFCSLAB / IFCSPACE / IFCOPENINGELEMENT
    name: str
    entity_id: int
    footprint: np.ndarray  # (N, 2) world XY of the extruded profile
    z_bottom: float
    z_top: float
    # wall-specific view of the same solid
    axis_start: np.ndarray | None = None
    axis_end: np.ndarray | None = None
    thickness: float | None = None
    openings: list = field(default_factory=list)


def _placement_matrix(entities, ref) -> np.ndarray:
    """4x4 world transform of an IfcLocalPlacement / IfcAxis2Placement3D chain."""
    if ref is None:
        return np.eye(4)
    ent = entities[ref.id]
    if ent.type_name == "IFCLOCALPLACEMENT":
        rel, placement = ent.args[0], ent.args[1]
        base = _placement_matrix(entities, rel if isinstance(rel, PRef) else None)
        return base @ _placement_matrix(entities, placement)
    if ent.type_name == "IFCAXIS2PLACEMENT3D":
        loc = np.array(entities[ent.args[0].id].args[0], dtype=float)
        if loc.size == 2:
            loc = np.append(loc, 0.0)
        z = np.array([0.0, 0.0, 1.0])
        if isinstance(ent.args[1], PRef):
            z = np.array(entities[ent.args[1].id].args[0], dtype=float)
            z = z / np.linalg.norm(z)
        x = np.array([1.0, 0.0, 0.0])
        if isinstance(ent.args[2], PRef):
            x = np.array(entities[ent.args[2].id].args[0], dtype=float)
            if x.size == 2:
                x = np.append(x, 0.0)
        x = x - (x @ z) * z
        x = x / np.linalg.norm(x)
        y = np.cross(z, x)
        m = np.eye(4)
        m[:3, 0], m[:3, 1], m[:3, 2], m[:3, 3] = x, y, z, loc
        return m
    if ent.type_name == "IFCAXIS2PLACEMENT2D":
        loc = np.array(entities[ent.args[0].id].args[0], dtype=float)
        x = np.array([1.0, 0.0])
        if len(ent.args) > 1 and isinstance(ent.args[1], PRef):
            x = np.array(entities[ent.args[1].id].args[0], dtype=float)[:2]
            x = x / np.linalg.norm(x)
        m = np.eye(4)
        m[:2, 0] = x
        m[:2, 1] = [-x[1], x[0]]
        m[:2, 3] = loc
        return m
    raise ValueError(f"unsupported placement entity {ent.type_name}")


def _profile_polygon(entities, ref) -> np.ndarray:
    ent = entities[ref.id]
    if ent.type_name == "IFCARBITRARYCLOSEDPROFILEDEF":
        poly = entities[ent.args[2].id]
        pts = [np.array(entities[p.id].args[0], dtype=float) for p in poly.args[0]]
        if len(pts) >= 2 and np.allclose(pts[0], pts[-1]):
            pts = pts[:-1]
        return np.array(pts)
    if ent.type_name == "IFCRECTANGLEPROFILEDEF":
        pos = _placement_matrix(entities, ent.args[2]) if isinstance(ent.args[2], PRef) else np.eye(4)
        xd, yd = float(ent.args[3]), float(ent.args[4])
        corners = np.array(
            [[-xd / 2, -yd / 2], [xd / 2, -yd / 2], [xd / 2, yd / 2], [-xd / 2, yd / 2]]
        )
        h = np.column_stack([corners, np.zeros(4), np.ones(4)])
        return (pos @ h.T).T[:, :2]
    raise ValueError(f"unsupported profile {ent.type_name}")


def extract_solids(path) -> list[SolidRecord]:
    """Rebuild element solids (footprint + z-range) from a STEP file's numbers."""
    text = Path(path).read_text(encoding="ascii", errors="replace")
    entities, _, errors = parse_step(text)
    if errors:
        raise ValueError("cannot extract geometry: " + "; ".join(errors))
    records: dict[int, SolidRecord] = {}
    for ent in entities.values():
        if ent.type_name not in {"IFCWALL", "IFCSLAB", "IFCSPACE", "IFCOPENINGELEMENT"}:
            continue
        placement_ref = ent.args[5] if isinstance(ent.args[5], PRef) else None
        shape_ref = ent.args[6] if isinstance(ent.args[6], PRef) else None
        if shape_ref is None:
            continue
        shape = entities[shape_ref.id]
        solid = None
        for rep_ref in shape.args[2]:
            rep = entities[rep_ref.id]
            for item in rep.args[3]:
                if entities[item.id].type_name == "IFCEXTRUDEDAREASOLID":
                    solid = entities[item.id]
        if solid is None:
            continue
        world = _placement_matrix(entities, placement_ref)
        solid_pos = _placement_matrix(entities, solid.args[1]) if isinstance(solid.args[1], PRef) else np.eye(4)
        m = world @ solid_pos
        profile = _profile_polygon(entities, solid.args[0])
        depth = float(solid.args[3])
        h = np.column_stack([profile, np.zeros(len(profile)), np.ones(len(profile))])
        world_pts = (m @ h.T).T
        footprint = world_pts[:, :2]
        z0 = float(world_pts[0, 2])
        name = ent.args[2] if isinstance(ent.args[2], str) else ""
        rec = SolidRecord(
            type_name=ent.type_name,
            name=name,
            entity_id=ent.id,
            footprint=footprint,
            z_bottom=z0,
            z_top=z0 + depth,
        )
        if ent.type_name == "IFCWALL":
            prof = entities[solid.args[0].id]
            if prof.type_name == "IFCRECTANGLEPROFILEDEF":
                # wall axis: profile x-axis in world space, spanning XDim
                pos = _placement_matrix(entities, prof.args[2])
                length, thickness = float(prof.args[3]), float(prof.args[4])
                a_local = pos @ np.array([-length / 2, 0, 0, 1.0])
                b_local = pos @ np.array([length / 2, 0, 0, 1.0])
                a = (m @ a_local)[:2]
                b = (m @ b_local)[:2]
                rec.axis_start, rec.axis_end, rec.thickness = a, b, thickness
        records[ent.id] = rec

    # attach openings to their walls
    for ent in entities.values():
        if ent.type_name == "IFCRELVOIDSELEMENT" and len(ent.args) >= 6:
            wall_ref, opening_ref = ent.args[4], ent.args[5]
            if isinstance(wall_ref, PRef) and isinstance(opening_ref, PRef):
                wall_rec = records.get(wall_ref.id)
                op_rec = records.get(opening_ref.id)
                if wall_rec is not None and op_rec is not None:
                    wall_rec.openings.append(op_rec)
    return [records[k] for k in sorted(records)]
