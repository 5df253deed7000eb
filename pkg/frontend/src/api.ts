/** Typed client for the calibration API. The fetch implementation is
 * injectable so tests can intercept every request and response. */

import type { FieldError, SessionInfo, StageId, StageRunResponse } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    message: string,
    public status: number,
    public fieldErrors: FieldError[] = [],
  ) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
    private base = "",
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let res: Response;
    try {
      res = await this.fetchImpl(this.base + path, init);
    } catch (err) {
      throw new ApiError(`API unreachable: ${String(err)}`, 0);
    }
    if (!res.ok) {
      let detail: unknown = null;
      try {
        detail = (await res.json()).detail;
      } catch {
        /* non-JSON error body */
      }
      if (Array.isArray(detail)) {
        throw new ApiError(`request failed: ${res.status}`, res.status, detail as FieldError[]);
      }
      throw new ApiError(typeof detail === "string" ? detail : `request failed: ${res.status}`, res.status);
    }
    const type = res.headers.get("content-type") ?? "";
    if (type.includes("application/json")) {
      return (await res.json()) as T;
    }
    return (await res.text()) as unknown as T;
  }

  getSession(): Promise<SessionInfo> {
    return this.request("/api/session");
  }

  getParams(): Promise<{ input: Record<string, unknown>; calibration: Record<string, unknown> }> {
    return this.request("/api/params");
  }

  putParams(update: { input?: Record<string, unknown>; calibration?: Record<string, unknown> }): Promise<{
    ok: boolean;
    stale: StageId[];
  }> {
    return this.request("/api/params", {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ input: update.input ?? {}, calibration: update.calibration ?? {} }),
    });
  }

  getConfigToml(): Promise<string> {
    return this.request("/api/config");
  }

  runStage(stage: StageId): Promise<StageRunResponse> {
    return this.request(`/api/stage/${stage}/run`, { method: "POST" });
  }

  async exportIfc(): Promise<Blob> {
    const res = await this.fetchImpl(this.base + "/api/export", { method: "POST" });
    if (!res.ok) {
      throw new ApiError(`export failed: ${res.status}`, res.status);
    }
    return res.blob();
  }

  async fetchPreview(url: string): Promise<Blob> {
    const res = await this.fetchImpl(this.base + url);
    if (!res.ok) {
      throw new ApiError(`preview failed: ${res.status}`, res.status);
    }
    return res.blob();
  }
}
