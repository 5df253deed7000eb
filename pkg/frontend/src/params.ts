/** Parameter controls: ranges, validation, and the config serializer.
 *
 * Control keys match the server's calibration/input parameter names exactly;
 * values that fail validation here must never produce an HTTP request.
 */

export interface ParamControl {
  key: string;
  section: "calibration" | "calibration.openings" | "input";
  label: string;
  min: number;
  max: number;
  step: number;
  unit: string;
  integer?: boolean;
}

export const PARAM_CONTROLS: ParamControl[] = [
  { key: "dilution_factor", section: "calibration", label: "Row dilution factor", min: 1, max: 50, step: 1, unit: "", integer: true },
  { key: "grid_coefficient", section: "calibration", label: "Raster cell size", min: 1, max: 50, step: 0.5, unit: "mm" },
  { key: "z_step", section: "calibration", label: "Slab histogram bin", min: 0.01, max: 0.5, step: 0.005, unit: "m" },
  { key: "max_n_points_array", section: "calibration", label: "Slab peak fraction", min: 0.05, max: 1, step: 0.05, unit: "" },
  { key: "dilation_meters", section: "calibration", label: "Footprint dilation", min: 0, max: 3, step: 0.05, unit: "m" },
  { key: "erosion_meters", section: "calibration", label: "Footprint erosion", min: 0, max: 3, step: 0.05, unit: "m" },
  { key: "smoothing_factor", section: "calibration", label: "Footprint smoothing", min: 0, max: 0.1, step: 0.0005, unit: "m" },
  { key: "safety_margin", section: "calibration", label: "Storey clearance", min: 0, max: 0.5, step: 0.01, unit: "m" },
  { key: "threshold", section: "calibration", label: "Wall mask threshold", min: 0, max: 1, step: 0.01, unit: "" },
  { key: "kernel_cells", section: "calibration", label: "Wall closing kernel", min: 1, max: 15, step: 2, unit: "cells", integer: true },
  { key: "epsilon", section: "calibration", label: "Contour simplification", min: 0, max: 0.2, step: 0.005, unit: "m" },
  { key: "angle_tolerance", section: "calibration", label: "Collinear merge angle", min: 0.5, max: 15, step: 0.5, unit: "deg" },
  { key: "max10", section: "calibration", label: "Opening reference rank", min: 1, max: 50, step: 1, unit: "", integer: true },
  { key: "gap_fraction", section: "calibration", label: "Opening gap fraction", min: 0.05, max: 0.95, step: 0.05, unit: "" },
  { key: "min_overlap_fraction", section: "calibration", label: "Wall pairing overlap", min: 0.05, max: 1, step: 0.05, unit: "" },
  { key: "door_max_sill", section: "calibration.openings", label: "Door max sill", min: 0.01, max: 0.5, step: 0.01, unit: "m" },
  { key: "min_width", section: "calibration.openings", label: "Opening min width", min: 0.1, max: 2, step: 0.05, unit: "m" },
  { key: "max_width", section: "calibration.openings", label: "Opening max width", min: 0.5, max: 6, step: 0.1, unit: "m" },
  { key: "min_height", section: "calibration.openings", label: "Opening min height", min: 0.1, max: 2, step: 0.05, unit: "m" },
  { key: "aspect_min", section: "calibration.openings", label: "Aspect ratio min", min: 0.05, max: 1, step: 0.05, unit: "" },
  { key: "aspect_max", section: "calibration.openings", label: "Aspect ratio max", min: 1, max: 10, step: 0.5, unit: "" },
];

export function controlFor(key: string): ParamControl | undefined {
  return PARAM_CONTROLS.find((c) => c.key === key);
}

export interface ValidationIssue {
  key: string;
  message: string;
}

/** Gate a slider/text value against its control range; null means valid. */
export function validateValue(control: ParamControl, value: number): ValidationIssue | null {
  if (!Number.isFinite(value)) {
    return { key: control.key, message: "not a number" };
  }
  if (control.integer && !Number.isInteger(value)) {
    return { key: control.key, message: "must be an integer" };
  }
  if (value < control.min || value > control.max) {
    return {
      key: control.key,
      message: `out of range [${control.min}, ${control.max}] ${control.unit}`.trim(),
    };
  }
  return null;
}

export interface ParamState {
  input: Record<string, unknown>;
  calibration: Record<string, unknown>;
}

/** Python repr() float formatting, needed for byte-stable config output. */
export function formatPyFloat(v: number): string {
  if (Number.isInteger(v)) {
    return Math.abs(v) <= 1e16 ? `${v.toFixed(1)}` : String(v);
  }
  return String(v);
}

function tomlValue(v: unknown, asFloat: boolean): string {
  if (typeof v === "boolean") return v ? "true" : "false";
  if (typeof v === "number") {
    if (!asFloat && Number.isInteger(v)) return String(v);
    return formatPyFloat(v);
  }
  if (typeof v === "string") return `"${v.replace(/\\/g, "\\\\").replace(/"/g, '\\"')}"`;
  if (Array.isArray(v)) return `[${v.map((x) => tomlValue(x, asFloat)).join(", ")}]`;
  throw new Error(`cannot serialize ${typeof v}`);
}

// field order and float/int typing mirror the server's canonical dump
const INPUT_FIELDS: [string, "float" | "int" | "str"][] = [
  ["pc_resolution", "float"],
  ["bfs_thickness", "float"],
  ["tfs_thickness", "float"],
  ["min_wall_length", "float"],
  ["min_wall_thickness", "float"],
  ["max_wall_thickness", "float"],
  ["exterior_walls_thickness", "float"],
  ["snapping_distance", "float"],
  ["material_for_objects", "str"],
  ["ifc_site_latitude", "float"],
  ["ifc_site_longitude", "float"],
  ["ifc_site_elevation", "float"],
  ["ifc_project_name", "str"],
  ["ifc_project_long_name", "str"],
  ["ifc_project_version", "str"],
  ["ifc_author_name", "str"],
  ["ifc_author_surname", "str"],
  ["ifc_author_organization", "str"],
  ["ifc_building_name", "str"],
  ["ifc_building_type", "str"],
  ["ifc_building_phase", "str"],
];

const CALIBRATION_FIELDS: [string, "float" | "int" | "floatlist"][] = [
  ["dilution_factor", "int"],
  ["grid_coefficient", "float"],
  ["z_step", "float"],
  ["max_n_points_array", "float"],
  ["dilation_meters", "float"],
  ["erosion_meters", "float"],
  ["smoothing_factor", "float"],
  ["safety_margin", "float"],
  ["z_section_boundaries", "floatlist"],
  ["threshold", "float"],
  ["kernel_cells", "int"],
  ["epsilon", "float"],
  ["angle_tolerance", "float"],
  ["max10", "int"],
  ["gap_fraction", "float"],
  ["min_overlap_fraction", "float"],
];

const OPENING_FIELDS: string[] = [
  "door_max_sill",
  "min_width",
  "max_width",
  "min_height",
  "aspect_min",
  "aspect_max",
];

/** Serialize the parameter set exactly like the server's canonical TOML dump. */
export function serializeConfig(params: ParamState): string {
  const lines: string[] = ["[input]"];
  for (const [name, kind] of INPUT_FIELDS) {
    const v = params.input[name];
    lines.push(`${name} = ${tomlValue(v, kind === "float")}`);
  }
  lines.push("", "[calibration]");
  const calibration = params.calibration as Record<string, unknown>;
  for (const [name, kind] of CALIBRATION_FIELDS) {
    const key = name === "kernel_cells" ? '"square(5)"' : name;
    lines.push(`${key} = ${tomlValue(calibration[name], kind !== "int")}`);
  }
  lines.push("", "[calibration.openings]");
  const openings = (calibration["openings"] ?? {}) as Record<string, unknown>;
  for (const name of OPENING_FIELDS) {
    lines.push(`${name} = ${tomlValue(openings[name], true)}`);
  }
  return lines.join("\n") + "\n";
}
