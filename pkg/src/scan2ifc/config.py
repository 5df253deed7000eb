"""Configuration schema: input parameters and calibration parameters.

Config files are TOML with two sections, [input] and [calibration] (plus an
optional [calibration.openings] table). Keys keep their published names; an
empty file or bare section headers load the shipped defaults. Validation is
total: every out-of-range value raises a ConfigError naming the field.
"""
from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .ifc.model import ProjectMeta
from .openings import OpeningHeuristics


@dataclass
class InputParams:
    pc_resolution: float = 0.01
    bfs_thickness: float = 0.3
    tfs_thickness: float = 0.3
    min_wall_length: float = 0.5
    min_wall_thickness: float = 0.08
    max_wall_thickness: float = 0.6
    exterior_walls_thickness: float = 0.3
    snapping_distance: float = 0.3
    material_for_objects: str = "Concrete"
    ifc_site_latitude: float = 0.0
    ifc_site_longitude: float = 0.0
    ifc_site_elevation: float = 0.0
    ifc_project_name: str = "Scan-to-model project"
    ifc_project_long_name: str = ""
    ifc_project_version: str = ""
    ifc_author_name: str = ""
    ifc_author_surname: str = ""
    ifc_author_organization: str = ""
    ifc_building_name: str = "Building"
    ifc_building_type: str = ""
    ifc_building_phase: str = ""

    def validate(self):
        _positive(self, "pc_resolution", "bfs_thickness", "tfs_thickness", "min_wall_length",
                  "min_wall_thickness", "max_wall_thickness", "exterior_walls_thickness")
        if self.snapping_distance < 0:
            raise ConfigError("snapping_distance", "must be >= 0")
        if self.min_wall_thickness >= self.max_wall_thickness:
            raise ConfigError("min_wall_thickness", "must be < max_wall_thickness")
        if not -90 <= self.ifc_site_latitude <= 90:
            raise ConfigError("ifc_site_latitude", "must be within [-90, 90]")
        if not -180 <= self.ifc_site_longitude <= 180:
            raise ConfigError("ifc_site_longitude", "must be within [-180, 180]")

    def meta(self) -> ProjectMeta:
        return ProjectMeta(
            project_name=self.ifc_project_name,
            long_name=self.ifc_project_long_name,
            version=self.ifc_project_version,
            author_name=self.ifc_author_name,
            author_surname=self.ifc_author_surname,
            organization=self.ifc_author_organization,
            building_name=self.ifc_building_name,
            building_type=self.ifc_building_type,
            building_phase=self.ifc_building_phase,
            site_latitude=self.ifc_site_latitude,
            site_longitude=self.ifc_site_longitude,
            site_elevation=self.ifc_site_elevation,
            material=self.material_for_objects,
        )


@dataclass
class CalibrationParams:
    dilution_factor: int = 10
    grid_coefficient: float = 5.0  # mm per raster cell
    z_step: float = 0.05
    max_n_points_array: float = 0.5
    dilation_meters: float = 1.0
    erosion_meters: float = 1.0
    smoothing_factor: float = 0.0005
    safety_margin: float = 0.1
    z_section_boundaries: tuple = (0.9, 1.0)
    threshold: float = 0.01
    kernel_cells: int = 5  # published as square(5)
    epsilon: float = 0.02
    angle_tolerance: float = 3.0
    max10: int = 10
    gap_fraction: float = 0.25
    min_overlap_fraction: float = 0.5
    openings: OpeningHeuristics = field(default_factory=OpeningHeuristics)

    @property
    def cell_size(self) -> float:
        return self.grid_coefficient / 1000.0

    def heuristics(self) -> OpeningHeuristics:
        h = OpeningHeuristics(**asdict(self.openings))
        h.tenth_max_rank = self.max10
        h.gap_fraction = self.gap_fraction
        return h

    def validate(self):
        if not isinstance(self.dilution_factor, int) or self.dilution_factor < 1:
            raise ConfigError("dilution_factor", "must be an integer >= 1")
        if not 0 < self.grid_coefficient <= 1000:
            raise ConfigError("grid_coefficient", "must be in (0, 1000] mm")
        if not 0 < self.z_step <= 1:
            raise ConfigError("z_step", "must be in (0, 1] m")
        if not 0 < self.max_n_points_array <= 1:
            raise ConfigError("max_n_points_array", "must be in (0, 1]")
        if not 0 <= self.dilation_meters <= 10:
            raise ConfigError("dilation_meters", "must be in [0, 10] m")
        if not 0 <= self.erosion_meters <= 10:
            raise ConfigError("erosion_meters", "must be in [0, 10] m")
        if not 0 <= self.smoothing_factor <= 1:
            raise ConfigError("smoothing_factor", "must be in [0, 1] m")
        if not 0 <= self.safety_margin <= 1:
            raise ConfigError("safety_margin", "must be in [0, 1] m")
        zb = self.z_section_boundaries
        if len(zb) != 2 or not (0 <= zb[0] < zb[1] <= 1):
            raise ConfigError("z_section_boundaries", "must be [lo, hi] with 0 <= lo < hi <= 1")
        if not 0 <= self.threshold <= 1:
            raise ConfigError("threshold", "must be in [0, 1]")
        if not isinstance(self.kernel_cells, int) or not 1 <= self.kernel_cells <= 99:
            raise ConfigError("square(5)", "kernel size must be an integer in [1, 99]")
        if not 0 <= self.epsilon <= 1:
            raise ConfigError("epsilon", "must be in [0, 1] m")
        if not 0 < self.angle_tolerance < 45:
            raise ConfigError("angle_tolerance", "must be in (0, 45) degrees")
        if not isinstance(self.max10, int) or self.max10 < 1:
            raise ConfigError("max10", "must be an integer >= 1")
        if not 0 < self.gap_fraction < 1:
            raise ConfigError("gap_fraction", "must be in (0, 1)")
        if not 0 < self.min_overlap_fraction <= 1:
            raise ConfigError("min_overlap_fraction", "must be in (0, 1]")
        try:
            self.heuristics().validate()
        except ValueError as exc:
            raise ConfigError("openings", str(exc)) from None


@dataclass
class Config:
    input: InputParams = field(default_factory=InputParams)
    calibration: CalibrationParams = field(default_factory=CalibrationParams)

    def validate(self):
        self.input.validate()
        self.calibration.validate()


def _positive(obj, *names):
    for name in names:
        if getattr(obj, name) <= 0:
            raise ConfigError(name, "must be > 0")


_KERNEL_ALIASES = ("square(5)", "kernel_cells", "square")


def _apply(obj, table: dict, section: str, aliases: dict | None = None):
    aliases = aliases or {}
    valid = {f.name for f in fields(obj)}
    for key, value in table.items():
        name = aliases.get(key, key)
        if name not in valid or name == "openings":
            raise ConfigError(f"{section}.{key}", "unknown parameter")
        current = getattr(obj, name)
        if isinstance(current, tuple):
            try:
                value = tuple(float(v) for v in value)
            except (TypeError, ValueError):
                raise ConfigError(f"{section}.{key}", "must be a list of numbers") from None
        elif isinstance(current, int) and not isinstance(current, bool):
            if not isinstance(value, int):
                raise ConfigError(f"{section}.{key}", "must be an integer")
        elif isinstance(current, float):
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ConfigError(f"{section}.{key}", "must be a number")
            value = float(value)
        elif isinstance(current, str):
            if not isinstance(value, str):
                raise ConfigError(f"{section}.{key}", "must be a string")
        setattr(obj, name, value)


def parse_config(text: str) -> Config:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config", f"invalid TOML: {exc}") from None
    cfg = Config()
    known_sections = {"input", "calibration"}
    for section in data:
        if section not in known_sections:
            raise ConfigError(section, "unknown section")
    _apply(cfg.input, data.get("input", {}), "input")
    calib = dict(data.get("calibration", {}))
    openings_table = calib.pop("openings", {})
    if not isinstance(openings_table, dict):
        raise ConfigError("calibration.openings", "must be a table")
    _apply(cfg.calibration, calib, "calibration",
           aliases={k: "kernel_cells" for k in _KERNEL_ALIASES})
    _apply(cfg.calibration.openings, openings_table, "calibration.openings")
    cfg.validate()
    return cfg


def load_config(path) -> Config:
    return parse_config(Path(path).read_text())


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int,)):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (tuple, list)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v)!r}")


def dump_config(cfg: Config) -> str:
    """Canonical TOML serialization (field order fixed, byte-stable)."""
    lines = ["[input]"]
    for f in fields(cfg.input):
        lines.append(f"{f.name} = {_toml_value(getattr(cfg.input, f.name))}")
    lines.append("")
    lines.append("[calibration]")
    for f in fields(cfg.calibration):
        if f.name == "openings":
            continue
        key = '"square(5)"' if f.name == "kernel_cells" else f.name
        lines.append(f"{key} = {_toml_value(getattr(cfg.calibration, f.name))}")
    lines.append("")
    lines.append("[calibration.openings]")
    for f in fields(cfg.calibration.openings):
        if f.name in ("tenth_max_rank", "gap_fraction"):
            continue  # owned by [calibration] as max10 / gap_fraction
        lines.append(f"{f.name} = {_toml_value(getattr(cfg.calibration.openings, f.name))}")
    return "\n".join(lines) + "\n"


def save_config(cfg: Config, path) -> Path:
    path = Path(path)
    path.write_text(dump_config(cfg))
    return path
