/** Pointer gestures to brush strokes.
 *
 * A slice PNG has one pixel per voxel: column = first in-plane axis,
 * row = second. Voxel centers sit at integer voxel coordinates, so pixel
 * (i, j) covers voxel coordinates [i - 0.5, i + 0.5] x [j - 0.5, j + 0.5]
 * and canvas positions map linearly onto that grid.
 */

import type { AxisName, BrushModeName, DiscStroke, SphereStroke } from "./api.js";
import { planeAxes } from "./state.js";

export interface SliceGeometry {
  dims: [number, number, number];
  spacingMm: [number, number, number];
  axis: AxisName;
  canvasWidth: number;
  canvasHeight: number;
}

/** Canvas pixel position -> slice mm coordinates (in-plane axes, ascending). */
export function pointerToSliceMm(
  g: SliceGeometry, px: number, py: number): [number, number] {
  const [a1, a2] = planeAxes(g.axis);
  const n1 = g.dims[a1];
  const n2 = g.dims[a2];
  const u = (px / g.canvasWidth) * n1 - 0.5;
  const v = (py / g.canvasHeight) * n2 - 0.5;
  return [u * g.spacingMm[a1], v * g.spacingMm[a2]];
}

/** mm -> canvas pixels; inverse of pointerToSliceMm (for contour overlays). */
export function sliceMmToCanvas(
  g: SliceGeometry, mmU: number, mmV: number): [number, number] {
  const [a1, a2] = planeAxes(g.axis);
  const u = mmU / g.spacingMm[a1];
  const v = mmV / g.spacingMm[a2];
  return [
    ((u + 0.5) / g.dims[a1]) * g.canvasWidth,
    ((v + 0.5) / g.dims[a2]) * g.canvasHeight,
  ];
}

/** Commit a recorded pointer path as one disc stroke (on pen lift). */
export function pathToDiscStroke(
  g: SliceGeometry,
  canvasPath: [number, number][],
  sliceIndex: number,
  radiusMm: number,
  mode: BrushModeName,
  timestampMs: number,
  maskVersion?: number,
): DiscStroke {
  if (canvasPath.length === 0) throw new Error("empty pointer path");
  const path = canvasPath.map(([px, py]) => pointerToSliceMm(g, px, py));
  const stroke: DiscStroke = {
    tool: "disc2d",
    mode,
    radius_mm: radiusMm,
    path,
    t: timestampMs,
    axis: g.axis,
    slice: sliceIndex,
  };
  if (maskVersion !== undefined) stroke.maskVersion = maskVersion;
  return stroke;
}

// -- 3D sphere gesture on the server-rendered orbit preview -----------------

export interface OrbitCameraBasis {
  position: [number, number, number];
  view: [number, number, number];
  up: [number, number, number];
  right: [number, number, number];
}

/** Mirror of the service's orbit camera: a point on a sphere around
 * `center`, looking inward, with a stable tangent up vector. */
export function orbitCamera(
  center: [number, number, number], distance: number,
  azimuthDeg: number, elevationDeg: number): OrbitCameraBasis {
  const az = (azimuthDeg * Math.PI) / 180;
  const el = (elevationDeg * Math.PI) / 180;
  const d: [number, number, number] = [
    Math.cos(el) * Math.cos(az),
    Math.cos(el) * Math.sin(az),
    Math.sin(el),
  ];
  const up: [number, number, number] = [
    -Math.sin(el) * Math.cos(az),
    -Math.sin(el) * Math.sin(az),
    Math.cos(el),
  ];
  const view: [number, number, number] = [-d[0], -d[1], -d[2]];
  const right: [number, number, number] = [
    view[1] * up[2] - view[2] * up[1],
    view[2] * up[0] - view[0] * up[2],
    view[0] * up[1] - view[1] * up[0],
  ];
  return {
    position: [
      center[0] + distance * d[0],
      center[1] + distance * d[1],
      center[2] + distance * d[2],
    ],
    view,
    up,
    right,
  };
}

/** Click on the orthographic 3D preview + explicit depth -> world mm point.
 *
 * Depth is measured along the view direction from the camera position; a
 * screen click fixes only two coordinates, so the slider supplies the third.
 */
export function previewPointToWorldMm(
  cam: OrbitCameraBasis,
  px: number, py: number,
  canvasSize: number,
  worldWidth: number,
  depthMm: number,
): [number, number, number] {
  const u = (px / canvasSize - 0.5) * worldWidth;
  const v = (0.5 - py / canvasSize) * worldWidth;
  return [
    cam.position[0] + u * cam.right[0] + v * cam.up[0] + depthMm * cam.view[0],
    cam.position[1] + u * cam.right[1] + v * cam.up[1] + depthMm * cam.view[1],
    cam.position[2] + u * cam.right[2] + v * cam.up[2] + depthMm * cam.view[2],
  ];
}

export function sphereStrokeAt(
  point: [number, number, number],
  radiusMm: number,
  mode: BrushModeName,
  timestampMs: number,
  maskVersion?: number,
): SphereStroke {
  const stroke: SphereStroke = {
    tool: "sphere3d",
    mode,
    radius_mm: radiusMm,
    path: [point],
    t: timestampMs,
  };
  if (maskVersion !== undefined) stroke.maskVersion = maskVersion;
  return stroke;
}
