/** View state and its pure update rules.
 *
 * The UI never computes mask pixels locally: state tracks which server
 * resources to show (slice, render, contours, DSC) and the mask version
 * those resources were derived from.
 */

import type { AxisName, BrushModeName, BrushToolName } from "./api.js";

export interface ViewState {
  projectId: string;
  dims: [number, number, number];
  spacingMm: [number, number, number];
  axis: AxisName;
  sliceIndex: number;
  window: { lo: number; hi: number };
  brush: { tool: BrushToolName; radiusMm: number; mode: BrushModeName };
  orbit: { azimuth: number; elevation: number; worldWidth: number };
  depthMm: number;
  bookmarks: number[];
  maskVersion: number;
  dsc: number | null;
}

export const AXIS_INDEX: Record<AxisName, number> = {
  sagittal: 0,
  coronal: 1,
  transverse: 2,
};

/** The two in-plane volume axes for a slicing orientation, ascending. */
export function planeAxes(axis: AxisName): [number, number] {
  switch (axis) {
    case "transverse": return [0, 1];
    case "sagittal": return [1, 2];
    case "coronal": return [0, 2];
  }
}

export function sliceCount(state: ViewState): number {
  return state.dims[AXIS_INDEX[state.axis]];
}

export function initialState(projectId: string, dims: [number, number, number],
                             spacingMm: [number, number, number],
                             window: { lo: number; hi: number },
                             maskVersion: number): ViewState {
  const extent = Math.max(
    dims[0] * spacingMm[0], dims[1] * spacingMm[1], dims[2] * spacingMm[2]);
  return {
    projectId,
    dims,
    spacingMm,
    axis: "transverse",
    sliceIndex: Math.floor(dims[2] / 2),
    window,
    brush: { tool: "disc2d", radiusMm: 2.0, mode: "paint" },
    orbit: { azimuth: 35, elevation: 25, worldWidth: extent * 1.5 },
    depthMm: extent / 2,
    bookmarks: [],
    maskVersion,
    dsc: null,
  };
}

export function clampSlice(state: ViewState, index: number): number {
  return Math.min(Math.max(0, Math.round(index)), sliceCount(state) - 1);
}

export function setAxis(state: ViewState, axis: AxisName): ViewState {
  const next = { ...state, axis };
  return { ...next, sliceIndex: clampSlice(next, state.sliceIndex), bookmarks: [] };
}

export function setSlice(state: ViewState, index: number): ViewState {
  return { ...state, sliceIndex: clampSlice(state, index) };
}

/** Mask versions only move forward; stale responses can never regress it. */
export function bumpMaskVersion(state: ViewState, version: number): ViewState {
  return { ...state, maskVersion: Math.max(state.maskVersion, version) };
}

export function toggleBookmark(state: ViewState, index?: number): ViewState {
  const k = index ?? state.sliceIndex;
  const bookmarks = state.bookmarks.includes(k)
    ? state.bookmarks.filter((b) => b !== k)
    : [...state.bookmarks, k].sort((a, b) => a - b);
  return { ...state, bookmarks };
}

export interface InterpReadiness {
  enabled: boolean;
  reason: string | null;
  keys: number[];
}

/** Interpolation needs at least two bookmarked (contoured) slices. */
export function interpReadiness(state: ViewState): InterpReadiness {
  if (state.bookmarks.length < 2) {
    return {
      enabled: false,
      reason: `need ${2 - state.bookmarks.length} more bookmarked slice(s)`,
      keys: [],
    };
  }
  return { enabled: true, reason: null, keys: [...state.bookmarks] };
}

// -- URL round trip: the deep-linkable part of the view state ---------------

export interface LinkState {
  projectId: string;
  axis: AxisName;
  sliceIndex: number;
  window: { lo: number; hi: number };
}

export function stateToHash(state: LinkState): string {
  const p = new URLSearchParams({
    project: state.projectId,
    axis: state.axis,
    slice: String(state.sliceIndex),
    window: `${state.window.lo},${state.window.hi}`,
  });
  return `#${p.toString()}`;
}

export function stateFromHash(hash: string): LinkState | null {
  const raw = hash.startsWith("#") ? hash.slice(1) : hash;
  if (!raw) return null;
  const p = new URLSearchParams(raw);
  const projectId = p.get("project");
  const axis = p.get("axis") as AxisName | null;
  if (!projectId || !axis || !(axis in AXIS_INDEX)) return null;
  const sliceIndex = Number(p.get("slice") ?? "0");
  const [lo, hi] = (p.get("window") ?? "0,1").split(",").map(Number);
  if (!Number.isFinite(sliceIndex) || !Number.isFinite(lo) || !Number.isFinite(hi)) {
    return null;
  }
  return { projectId, axis, sliceIndex, window: { lo, hi } };
}
