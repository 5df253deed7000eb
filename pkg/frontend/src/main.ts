/** App wiring: sidebar sliders, stage tabs, canvas previews, export. */

import { ApiClient, ApiError } from "./api.js";
import { PARAM_CONTROLS, serializeConfig, validateValue, type ParamControl } from "./params.js";
import { StageManager } from "./stages.js";
import type { StageId, StageRunResponse } from "./types.js";
import { STAGE_ORDER } from "./types.js";
import {
  CanvasSurface,
  histogramPath,
  panBy,
  renderSlabCandidates,
  renderWalls,
  renderZones,
  zoomAt,
  type Viewport,
} from "./view.js";

const DEBOUNCE_MS = 300;

const client = new ApiClient();
const stages = new StageManager(client);

interface AppState {
  params: { input: Record<string, unknown>; calibration: Record<string, unknown> };
  activeStage: StageId;
  activeStorey: number;
  view: Viewport;
  rasters: Map<string, ImageBitmap>;
}

const state: AppState = {
  params: { input: {}, calibration: {} },
  activeStage: "slabs",
  activeStorey: 0,
  view: { scale: 60, cx: 4, cy: 3 },
  rasters: new Map(),
};

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el;
}

function banner(message: string, retry?: () => void): void {
  const el = $("banner");
  el.textContent = message;
  el.classList.toggle("hidden", message === "");
  if (message && retry) {
    const btn = document.createElement("button");
    btn.textContent = "Retry";
    btn.onclick = () => {
      banner("");
      retry();
    };
    el.append(" ", btn);
  }
}

function paramValue(control: ParamControl): number {
  const calibration = state.params.calibration as Record<string, unknown>;
  if (control.section === "calibration") return Number(calibration[control.key]);
  if (control.section === "calibration.openings") {
    return Number((calibration["openings"] as Record<string, unknown>)[control.key]);
  }
  return Number(state.params.input[control.key]);
}

let pending = new Map<ParamControl, number>();
let debounceTimer: number | undefined;

function queueParamChange(control: ParamControl, value: number, errorEl: HTMLElement): void {
  const issue = validateValue(control, value);
  errorEl.textContent = issue ? issue.message : "";
  if (issue) {
    return; // never reaches the server
  }
  pending.set(control, value);
  window.clearTimeout(debounceTimer);
  debounceTimer = window.setTimeout(flushParams, DEBOUNCE_MS);
}

async function flushParams(): Promise<void> {
  if (pending.size === 0) return;
  const update: { calibration: Record<string, unknown>; input: Record<string, unknown> } = {
    calibration: {},
    input: {},
  };
  const openings: Record<string, unknown> = {};
  for (const [control, value] of pending) {
    if (control.section === "calibration") update.calibration[control.key] = value;
    else if (control.section === "calibration.openings") openings[control.key] = value;
    else update.input[control.key] = value;
  }
  if (Object.keys(openings).length) update.calibration["openings"] = openings;
  const sent = pending;
  pending = new Map();
  try {
    await client.putParams(update);
    for (const [control, value] of sent) {
      applyLocal(control, value);
      stages.markStale(control.key);
    }
    refreshStageTabs();
    drawActiveStage();
  } catch (err) {
    if (err instanceof ApiError && err.fieldErrors.length) {
      for (const fe of err.fieldErrors) {
        const row = document.querySelector(`[data-param-error="${fe.field}"]`);
        if (row) row.textContent = fe.message;
      }
    } else {
      banner(`Parameter update failed: ${String(err)}`, flushParams);
    }
  }
}

function applyLocal(control: ParamControl, value: number): void {
  const calibration = state.params.calibration as Record<string, unknown>;
  if (control.section === "calibration") calibration[control.key] = value;
  else if (control.section === "calibration.openings") {
    (calibration["openings"] as Record<string, unknown>)[control.key] = value;
  } else state.params.input[control.key] = value;
}

function buildSidebar(): void {
  const host = $("params");
  host.innerHTML = "";
  for (const control of PARAM_CONTROLS) {
    const row = document.createElement("div");
    row.className = "param-row";
    const label = document.createElement("label");
    label.textContent = `${control.label}${control.unit ? ` (${control.unit})` : ""}`;
    const slider = document.createElement("input");
    slider.type = "range";
    slider.min = String(control.min);
    slider.max = String(control.max);
    slider.step = String(control.step);
    const number = document.createElement("input");
    number.type = "number";
    number.step = String(control.step);
    const error = document.createElement("div");
    error.className = "param-error";
    error.dataset.paramError = control.key;

    const current = paramValue(control);
    slider.value = String(current);
    number.value = String(current);

    slider.oninput = () => {
      number.value = slider.value;
      queueParamChange(control, Number(slider.value), error);
    };
    number.oninput = () => {
      slider.value = number.value;
      queueParamChange(control, Number(number.value), error);
    };
    row.append(label, slider, number, error);
    host.append(row);
  }
}

function refreshStageTabs(): void {
  for (const stage of STAGE_ORDER) {
    const tab = $(`tab-${stage}`);
    const preview = stages.previews.get(stage)!;
    tab.classList.toggle("stale", preview.stale);
    tab.classList.toggle("active", stage === state.activeStage);
  }
}

async function runActiveStage(): Promise<void> {
  const stage = state.activeStage;
  const runBtn = $("run-stage") as HTMLButtonElement;
  runBtn.disabled = true;
  try {
    const response = await stages.run(stage);
    await loadRasters(response);
    refreshStageTabs();
    drawActiveStage();
    $("stage-status").textContent =
      `${stage}: ${response.cached ? "cached" : `${response.elapsed_ms.toFixed(0)} ms`}`;
  } catch (err) {
    banner(`Stage ${stage} failed: ${err instanceof Error ? err.message : String(err)}`, runActiveStage);
  } finally {
    runBtn.disabled = false;
  }
}

async function loadRasters(response: StageRunResponse): Promise<void> {
  for (const [name, url] of Object.entries(response.previews)) {
    const blob = await client.fetchPreview(url);
    state.rasters.set(`${response.stage}:${name}`, await createImageBitmap(blob));
  }
}

function drawActiveStage(): void {
  const canvas = $("preview") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  const surface = new CanvasSurface(ctx, canvas.width, canvas.height);
  surface.setView(state.view);
  const preview = stages.previews.get(state.activeStage)!;
  surface.clear(preview.stale);
  const response = preview.response;
  if (!response) return;
  drawArtifacts(surface, ctx, canvas, response);
}

function drawArtifacts(
  surface: CanvasSurface,
  ctx: CanvasRenderingContext2D,
  canvas: HTMLCanvasElement,
  response: StageRunResponse,
): void {
  const artifacts = response.artifacts as Record<string, unknown>;
  if (response.stage === "slabs") {
    const hist = artifacts["z_histogram"] as import("./types.js").HistogramPayload;
    const pts = histogramPath(hist, canvas.width, canvas.height * 0.3);
    ctx.strokeStyle = "#2f81f7";
    ctx.beginPath();
    for (const [x, y] of pts) ctx.lineTo(x, canvas.height - (canvas.height * 0.3 - y));
    ctx.stroke();
    renderSlabCandidates(surface, artifacts["slabs"] as never);
  } else if (response.stage === "walls") {
    const storeys = artifacts["storeys"] as never[];
    const sp = storeys[Math.min(state.activeStorey, storeys.length - 1)] as never;
    const raster = state.rasters.get(`walls:mask-${state.activeStorey}`) ?? null;
    renderWalls(surface, sp, raster);
  } else if (response.stage === "openings") {
    const walls = stages.previews.get("walls")!.response;
    if (walls) {
      const storeys = walls.artifacts["storeys"] as never[];
      renderWalls(surface, storeys[Math.min(state.activeStorey, storeys.length - 1)] as never, null);
    }
  } else if (response.stage === "zones") {
    renderZones(surface, (response.artifacts["zones"] as never[]) ?? []);
  }
}

function bindCanvas(): void {
  const canvas = $("preview") as HTMLCanvasElement;
  let dragging = false;
  let last: [number, number] = [0, 0];
  canvas.addEventListener("pointerdown", (e) => {
    dragging = true;
    last = [e.offsetX, e.offsetY];
    canvas.setPointerCapture(e.pointerId);
  });
  canvas.addEventListener("pointermove", (e) => {
    if (!dragging) return;
    state.view = panBy(state.view, e.offsetX - last[0], e.offsetY - last[1]);
    last = [e.offsetX, e.offsetY];
    drawActiveStage();
  });
  canvas.addEventListener("pointerup", () => (dragging = false));
  canvas.addEventListener("wheel", (e) => {
    e.preventDefault();
    const factor = e.deltaY < 0 ? 1.15 : 1 / 1.15;
    state.view = zoomAt(state.view, factor, [e.offsetX, e.offsetY], canvas.width, canvas.height);
    drawActiveStage();
  });
}

function downloadBlob(blob: Blob, filename: string): void {
  const a = document.createElement("a");
  a.href = URL.createObjectURL(blob);
  a.download = filename;
  a.click();
  URL.revokeObjectURL(a.href);
}

async function init(): Promise<void> {
  try {
    const session = await client.getSession();
    $("session-info").textContent =
      `${session.path} — ${session.count.toLocaleString()} points (engine ${session.tool_version})`;
    state.params = await client.getParams();
  } catch (err) {
    banner(`Cannot reach the engine: ${err instanceof Error ? err.message : String(err)}`, init);
    return;
  }
  buildSidebar();
  refreshStageTabs();
  bindCanvas();

  for (const stage of STAGE_ORDER) {
    $(`tab-${stage}`).onclick = () => {
      state.activeStage = stage;
      refreshStageTabs();
      drawActiveStage();
    };
  }
  $("run-stage").onclick = () => void runActiveStage();
  $("storey-select").onchange = () => {
    state.activeStorey = Number(($("storey-select") as HTMLSelectElement).value);
    drawActiveStage();
  };
  $("save-config").onclick = () => {
    // serialized client-side; byte-identical to the server dump by contract
    const text = serializeConfig(state.params as never);
    downloadBlob(new Blob([text], { type: "application/toml" }), "params.toml");
  };
  $("export-ifc").onclick = async () => {
    try {
      downloadBlob(await client.exportIfc(), "model.ifc");
    } catch (err) {
      banner(`Export failed: ${err instanceof Error ? err.message : String(err)}`);
    }
  };
}

void init();
