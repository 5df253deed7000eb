import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { StageManager, stagesAffectedBy } from "../src/stages.js";
import type { StageId } from "../src/types.js";

function mockClient(log: StageId[]): ApiClient {
  const fetchImpl = async (url: string): Promise<Response> => {
    const match = url.match(/\/api\/stage\/(\w+)\/run/);
    if (!match) throw new Error(`unexpected url ${url}`);
    const stage = match[1] as StageId;
    log.push(stage);
    return new Response(
      JSON.stringify({ stage, cached: false, elapsed_ms: 1, artifacts: {}, previews: {} }),
      { headers: { "content-type": "application/json" } },
    );
  };
  return new ApiClient(fetchImpl);
}

describe("staleness propagation", () => {
  it("epsilon invalidates walls and its dependents, not slabs", () => {
    expect(stagesAffectedBy("epsilon")).toEqual(["walls", "openings", "zones"]);
  });

  it("z_step invalidates everything downstream of slabs", () => {
    expect(stagesAffectedBy("z_step")).toEqual(["slabs", "walls", "openings", "zones"]);
  });

  it("gap_fraction only touches openings", () => {
    expect(stagesAffectedBy("gap_fraction")).toEqual(["openings"]);
  });

  it("snapping_distance only touches zones", () => {
    expect(stagesAffectedBy("snapping_distance")).toEqual(["zones"]);
  });
});

describe("stage manager", () => {
  it("runs prerequisites before the requested stage", async () => {
    const log: StageId[] = [];
    const manager = new StageManager(mockClient(log));
    await manager.run("openings");
    expect(log).toEqual(["slabs", "walls", "openings"]);
  });

  it("skips fresh prerequisites", async () => {
    const log: StageId[] = [];
    const manager = new StageManager(mockClient(log));
    await manager.run("walls");
    log.length = 0;
    await manager.run("openings");
    expect(log).toEqual(["openings"]);
  });

  it("marks previews stale on parameter changes and reruns them", async () => {
    const log: StageId[] = [];
    const manager = new StageManager(mockClient(log));
    await manager.run("zones");
    manager.markStale("epsilon");
    expect(manager.previews.get("walls")!.stale).toBe(true);
    expect(manager.previews.get("slabs")!.stale).toBe(false);
    log.length = 0;
    await manager.run("zones");
    expect(log).toEqual(["walls", "zones"]);
  });

  it("queues overlapping runs so only one is in flight", async () => {
    const order: string[] = [];
    let active = 0;
    const fetchImpl = async (url: string): Promise<Response> => {
      const stage = url.match(/\/api\/stage\/(\w+)\/run/)![1];
      active += 1;
      expect(active).toBe(1);
      order.push(stage);
      await new Promise((resolve) => setTimeout(resolve, 5));
      active -= 1;
      return new Response(
        JSON.stringify({ stage, cached: false, elapsed_ms: 1, artifacts: {}, previews: {} }),
        { headers: { "content-type": "application/json" } },
      );
    };
    const manager = new StageManager(new ApiClient(fetchImpl));
    await Promise.all([manager.run("slabs"), manager.run("walls")]);
    expect(order).toEqual(["slabs", "walls"]);
  });
});
