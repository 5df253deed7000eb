/** Plan-view renderer: raster previews with vector overlays, pan and zoom.
 *
 * Drawing goes through the Surface interface; every primitive carries the API
 * payload object it came from, so the integrity test can verify that nothing
 * on screen was fabricated client-side.
 */

import type { GridMeta, HistogramPayload, SegmentPayload, WallPayload, ZonePayload } from "./types.js";

export interface Surface {
  raster(image: CanvasImageSource | null, meta: GridMeta, source: unknown): void;
  polyline(points: [number, number][], color: string, width: number, source: unknown): void;
  polygon(points: [number, number][], stroke: string, fill: string, source: unknown): void;
  label(text: string, at: [number, number], source: unknown): void;
}

export interface Viewport {
  scale: number; // pixels per meter
  cx: number; // world center x
  cy: number; // world center y
}

export function worldToScreen(v: Viewport, w: number, h: number, p: [number, number]): [number, number] {
  return [w / 2 + (p[0] - v.cx) * v.scale, h / 2 - (p[1] - v.cy) * v.scale];
}

export function zoomAt(v: Viewport, factor: number, anchor: [number, number], w: number, h: number): Viewport {
  // keep the world point under the cursor fixed
  const wx = v.cx + (anchor[0] - w / 2) / v.scale;
  const wy = v.cy - (anchor[1] - h / 2) / v.scale;
  const scale = Math.min(Math.max(v.scale * factor, 2), 5000);
  return {
    scale,
    cx: wx - (anchor[0] - w / 2) / scale,
    cy: wy + (anchor[1] - h / 2) / scale,
  };
}

export function panBy(v: Viewport, dxPx: number, dyPx: number): Viewport {
  return { scale: v.scale, cx: v.cx - dxPx / v.scale, cy: v.cy + dyPx / v.scale };
}

export function renderWalls(
  surface: Surface,
  storeyPayload: { grid: GridMeta; segments: SegmentPayload[]; walls: WallPayload[] },
  rasterImage: CanvasImageSource | null,
): void {
  surface.raster(rasterImage, storeyPayload.grid, storeyPayload);
  for (const seg of storeyPayload.segments) {
    surface.polyline([seg.a, seg.b], "#2f81f7", 1.5, seg);
  }
  for (const wall of storeyPayload.walls) {
    surface.polyline([wall.axis_start, wall.axis_end], wall.exterior ? "#d29922" : "#3fb950", 3, wall);
  }
}

export function renderZones(surface: Surface, zones: ZonePayload[]): void {
  for (const zone of zones) {
    surface.polygon(zone.boundary, "#3fb950", "rgba(63,185,80,0.15)", zone);
    const c = centroid(zone.boundary);
    surface.label(`${zone.name} ${zone.area.toFixed(2)} m²`, c, zone);
  }
}

export function renderSlabCandidates(
  surface: Surface,
  slabs: { footprint: [number, number][] | null; z_bottom: number }[],
): void {
  for (const slab of slabs) {
    if (slab.footprint) {
      surface.polygon(slab.footprint, "#a371f7", "rgba(163,113,247,0.12)", slab);
    }
  }
}

export function histogramPath(hist: HistogramPayload, width: number, height: number): [number, number][] {
  const n = hist.counts.length;
  if (n === 0) return [];
  const max = Math.max(...hist.counts, 1);
  const pts: [number, number][] = [];
  for (let i = 0; i < n; i++) {
    const x = (i / n) * width;
    const y = height - (hist.counts[i] / max) * height;
    pts.push([x, y]);
    pts.push([((i + 1) / n) * width, y]);
  }
  return pts;
}

function centroid(points: [number, number][]): [number, number] {
  let sx = 0;
  let sy = 0;
  for (const [x, y] of points) {
    sx += x;
    sy += y;
  }
  return [sx / points.length, sy / points.length];
}

/** Canvas-backed Surface used by the app (tests use a recording Surface). */
export class CanvasSurface implements Surface {
  private view: Viewport = { scale: 60, cx: 0, cy: 0 };

  constructor(
    private ctx: CanvasRenderingContext2D,
    private width: number,
    private height: number,
  ) {}

  setView(view: Viewport): void {
    this.view = view;
  }

  clear(dimmed: boolean): void {
    this.ctx.fillStyle = dimmed ? "#1a1d23" : "#0d1117";
    this.ctx.fillRect(0, 0, this.width, this.height);
    this.ctx.globalAlpha = dimmed ? 0.45 : 1.0;
  }

  private toScreen(p: [number, number]): [number, number] {
    return worldToScreen(this.view, this.width, this.height, p);
  }

  raster(image: CanvasImageSource | null, meta: GridMeta): void {
    if (!image) return;
    const [x0, y0] = this.toScreen([meta.origin[0], meta.origin[1] + meta.height * meta.cell_size]);
    const wPx = meta.width * meta.cell_size * this.view.scale;
    const hPx = meta.height * meta.cell_size * this.view.scale;
    this.ctx.imageSmoothingEnabled = false;
    this.ctx.drawImage(image, x0, y0, wPx, hPx);
  }

  polyline(points: [number, number][], color: string, width: number): void {
    if (points.length < 2) return;
    this.ctx.strokeStyle = color;
    this.ctx.lineWidth = width;
    this.ctx.beginPath();
    const [x, y] = this.toScreen(points[0]);
    this.ctx.moveTo(x, y);
    for (const p of points.slice(1)) {
      const [px, py] = this.toScreen(p);
      this.ctx.lineTo(px, py);
    }
    this.ctx.stroke();
  }

  polygon(points: [number, number][], stroke: string, fill: string): void {
    if (points.length < 3) return;
    this.ctx.beginPath();
    const [x, y] = this.toScreen(points[0]);
    this.ctx.moveTo(x, y);
    for (const p of points.slice(1)) {
      const [px, py] = this.toScreen(p);
      this.ctx.lineTo(px, py);
    }
    this.ctx.closePath();
    this.ctx.fillStyle = fill;
    this.ctx.fill();
    this.ctx.strokeStyle = stroke;
    this.ctx.lineWidth = 1.5;
    this.ctx.stroke();
  }

  label(text: string, at: [number, number]): void {
    const [x, y] = this.toScreen(at);
    this.ctx.fillStyle = "#e6edf3";
    this.ctx.font = "12px system-ui, sans-serif";
    this.ctx.textAlign = "center";
    this.ctx.fillText(text, x, y);
  }
}
