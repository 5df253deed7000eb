/** Stage dependency tracking: which previews go stale when a parameter moves,
 * and client-side queueing so at most one stage run is in flight. */

import type { ApiClient } from "./api.js";
import type { StageId, StageRunResponse } from "./types.js";
import { STAGE_ORDER } from "./types.js";

// parameters feeding each stage; downstream stages inherit staleness
const STAGE_PARAMS: Record<StageId, string[]> = {
  slabs: [
    "grid_coefficient", "z_step", "max_n_points_array", "dilation_meters",
    "erosion_meters", "smoothing_factor", "safety_margin",
    "bfs_thickness", "tfs_thickness",
  ],
  walls: [
    "grid_coefficient", "z_section_boundaries", "threshold", "kernel_cells",
    "epsilon", "angle_tolerance", "min_overlap_fraction", "min_wall_length",
    "min_wall_thickness", "max_wall_thickness", "exterior_walls_thickness",
  ],
  openings: [
    "max10", "gap_fraction", "pc_resolution", "max_wall_thickness",
    "door_max_sill", "min_width", "max_width", "min_height", "aspect_min", "aspect_max",
  ],
  zones: ["snapping_distance", "grid_coefficient"],
};

const UPSTREAM: Record<StageId, StageId | null> = {
  slabs: null,
  walls: "slabs",
  openings: "walls",
  zones: "walls",
};

export interface StagePreview {
  stage: StageId;
  stale: boolean;
  response: StageRunResponse | null;
}

export function stagesAffectedBy(paramKey: string): StageId[] {
  const direct = STAGE_ORDER.filter((s) => STAGE_PARAMS[s].includes(paramKey));
  const all = new Set<StageId>(direct);
  let grew = true;
  while (grew) {
    grew = false;
    for (const s of STAGE_ORDER) {
      const up = UPSTREAM[s];
      if (up && all.has(up) && !all.has(s)) {
        all.add(s);
        grew = true;
      }
    }
  }
  return STAGE_ORDER.filter((s) => all.has(s));
}

export function upstreamOf(stage: StageId): StageId | null {
  return UPSTREAM[stage];
}

export class StageManager {
  previews = new Map<StageId, StagePreview>();
  private inflight: Promise<unknown> = Promise.resolve();

  constructor(private client: ApiClient) {
    for (const s of STAGE_ORDER) {
      this.previews.set(s, { stage: s, stale: true, response: null });
    }
  }

  markStale(paramKey: string): StageId[] {
    const affected = stagesAffectedBy(paramKey);
    for (const s of affected) {
      this.previews.get(s)!.stale = true;
    }
    return affected;
  }

  /** Run a stage (prerequisites first); serialized so runs never overlap. */
  run(stage: StageId): Promise<StageRunResponse> {
    const task = this.inflight.then(async () => {
      const chain: StageId[] = [];
      let cur: StageId | null = stage;
      while (cur) {
        chain.unshift(cur);
        cur = UPSTREAM[cur];
      }
      let last: StageRunResponse | null = null;
      for (const s of chain) {
        const preview = this.previews.get(s)!;
        if (s !== stage && !preview.stale && preview.response) {
          continue; // fresh prerequisite
        }
        last = await this.client.runStage(s);
        preview.response = last;
        preview.stale = false;
      }
      return last ?? this.previews.get(stage)!.response!;
    });
    // keep the queue alive on failure; the caller sees the rejection
    this.inflight = task.catch(() => undefined);
    return task;
  }
}
