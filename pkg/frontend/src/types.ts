/** Payload types of the calibration HTTP API (see ../api-contract.json). */

export interface SessionInfo {
  path: string;
  count: number;
  bounds_min: number[];
  bounds_max: number[];
  tool_version: string;
}

export interface HistogramPayload {
  origin: number;
  bin_size: number;
  counts: number[];
}

export interface GridMeta {
  origin: [number, number];
  cell_size: number;
  width: number;
  height: number;
}

export interface SegmentPayload {
  a: [number, number];
  b: [number, number];
  length: number;
}

export interface WallPayload {
  axis_start: [number, number];
  axis_end: [number, number];
  thickness: number;
  height: number;
  exterior: boolean;
}

export interface StoreyWallsPayload {
  storey: number;
  grid: GridMeta;
  segments: SegmentPayload[];
  walls: WallPayload[];
}

export interface OpeningPayload {
  wall: [number, number];
  x_offset: number;
  width: number;
  sill: number;
  height: number;
  kind: "door" | "window";
}

export interface ZonePayload {
  name: string;
  storey: number;
  area: number;
  boundary: [number, number][];
}

export interface StageRunResponse {
  stage: string;
  cached: boolean;
  elapsed_ms: number;
  artifacts: Record<string, unknown>;
  previews: Record<string, string>;
}

export interface FieldError {
  field: string;
  message: string;
}

export type StageId = "slabs" | "walls" | "openings" | "zones";

export const STAGE_ORDER: StageId[] = ["slabs", "walls", "openings", "zones"];
