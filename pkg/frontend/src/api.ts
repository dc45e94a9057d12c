/** Typed client for the contouring service HTTP API. */

export type AxisName = "transverse" | "sagittal" | "coronal";
export type BrushToolName = "disc2d" | "sphere3d";
export type BrushModeName = "paint" | "erase";

export interface ProjectMeta {
  id: string;
  dims: [number, number, number];
  spacing_mm: [number, number, number];
  raw_range: [number, number];
  window: { lo: number; hi: number };
  pose: { translation: number[]; rotation: number[]; scale: number };
  masks: string[];
  maskVersion: number;
}

export interface DiscStroke {
  tool: "disc2d";
  mode: BrushModeName;
  radius_mm: number;
  path: [number, number][];
  t: number;
  axis: AxisName;
  slice: number;
  maskVersion?: number;
}

export interface SphereStroke {
  tool: "sphere3d";
  mode: BrushModeName;
  radius_mm: number;
  path: [number, number, number][];
  t: number;
  maskVersion?: number;
}

export type Stroke = DiscStroke | SphereStroke;

export interface ContourSet {
  axis: AxisName;
  slices: { slice: number; polygons: [number, number][][] }[];
}

export interface MetricsSummary {
  complete: boolean;
  initial_exploration_ms: number | null;
  overall_tct_ms: number | null;
  attention?: { progress: number; tabletPct: number; volumePct: number; empty: boolean }[];
}

/** A mutation was rejected because the client's maskVersion is stale. */
export class ConflictError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ConflictError";
  }
}

async function asError(resp: Response): Promise<Error> {
  let detail = `${resp.status}`;
  try {
    const body = await resp.json();
    if (body && typeof body.error === "string") detail = body.error;
  } catch {
    /* non-JSON error body */
  }
  return resp.status === 409 ? new ConflictError(detail) : new Error(detail);
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string, params?: Record<string, string | number>): string {
    const u = new URL(path, this.baseUrl);
    if (params) {
      for (const [k, v] of Object.entries(params)) u.searchParams.set(k, String(v));
    }
    return u.toString();
  }

  async listProjects(): Promise<string[]> {
    const resp = await fetch(this.url("/projects"));
    if (!resp.ok) throw await asError(resp);
    return (await resp.json()).projects;
  }

  async getProject(id: string): Promise<ProjectMeta> {
    const resp = await fetch(this.url(`/projects/${id}`));
    if (!resp.ok) throw await asError(resp);
    return resp.json();
  }

  sliceUrl(id: string, axis: AxisName, index: number,
           window: { lo: number; hi: number }, version: number): string {
    return this.url(`/projects/${id}/slice`, {
      axis, index, window: `${window.lo},${window.hi}`, v: version,
    });
  }

  renderUrl(id: string, orbit: { azimuth: number; elevation: number; worldWidth: number },
            size: number, window: { lo: number; hi: number }, version: number): string {
    return this.url(`/projects/${id}/render`, {
      azimuth: orbit.azimuth, elevation: orbit.elevation, width: orbit.worldWidth,
      size: `${size}x${size}`, window: `${window.lo},${window.hi}`, v: version,
    });
  }

  async fetchPng(url: string): Promise<Uint8Array> {
    const resp = await fetch(url);
    if (!resp.ok) throw await asError(resp);
    return new Uint8Array(await resp.arrayBuffer());
  }

  async postStroke(id: string, stroke: Stroke): Promise<number> {
    const resp = await fetch(this.url(`/projects/${id}/stroke`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(stroke),
    });
    if (!resp.ok) throw await asError(resp);
    return (await resp.json()).maskVersion;
  }

  async postInterp(id: string, axis: AxisName, keys: number[],
                   maskVersion?: number): Promise<number> {
    const body: Record<string, unknown> = { axis, keys };
    if (maskVersion !== undefined) body.maskVersion = maskVersion;
    const resp = await fetch(this.url(`/projects/${id}/interp`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) throw await asError(resp);
    return (await resp.json()).maskVersion;
  }

  async postUndo(id: string): Promise<number> {
    const resp = await fetch(this.url(`/projects/${id}/undo`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: "{}",
    });
    if (!resp.ok) throw await asError(resp);
    return (await resp.json()).maskVersion;
  }

  async getDsc(id: string, against = "reference"): Promise<number> {
    const resp = await fetch(this.url(`/projects/${id}/dsc`, { against }));
    if (!resp.ok) throw await asError(resp);
    return (await resp.json()).dsc;
  }

  async getContours(id: string, axis: AxisName): Promise<ContourSet> {
    const resp = await fetch(this.url(`/projects/${id}/contours`, { axis }));
    if (!resp.ok) throw await asError(resp);
    return resp.json();
  }

  async getMetrics(id: string): Promise<MetricsSummary> {
    const resp = await fetch(this.url(`/projects/${id}/metrics`));
    if (!resp.ok) throw await asError(resp);
    return resp.json();
  }

  async postPose(id: string, pose: { translation: number[]; rotation: number[]; scale: number }): Promise<void> {
    const resp = await fetch(this.url(`/projects/${id}/pose`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(pose),
    });
    if (!resp.ok) throw await asError(resp);
  }

  async appendSessionEvents(id: string, lines: object[]): Promise<void> {
    const resp = await fetch(this.url(`/projects/${id}/session/events`), {
      method: "POST",
      headers: { "Content-Type": "application/x-ndjson" },
      body: lines.map((l) => JSON.stringify(l)).join("\n"),
    });
    if (!resp.ok) throw await asError(resp);
  }
}

/** DSC readout formatting shared by the UI and its tests: 4 decimal places. */
export function formatDsc(value: number): string {
  return value.toFixed(4);
}
