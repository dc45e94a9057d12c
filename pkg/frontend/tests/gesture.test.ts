import { describe, expect, it } from "vitest";

import {
  orbitCamera, pathToDiscStroke, pointerToSliceMm, previewPointToWorldMm,
  sliceMmToCanvas, SliceGeometry,
} from "../src/gesture.js";

const GEOM: SliceGeometry = {
  dims: [24, 20, 16],
  spacingMm: [1.0, 2.0, 3.0],
  axis: "transverse",
  canvasWidth: 240,   // 10 px per voxel along u
  canvasHeight: 200,  // 10 px per voxel along v
};

describe("pointer to slice mm", () => {
  it("maps a pixel center onto its voxel center", () => {
    // voxel (3, 5): pixel block center is at ((3+0.5)*10, (5+0.5)*10)
    const [u, v] = pointerToSliceMm(GEOM, 35, 55);
    expect(u).toBeCloseTo(3 * 1.0, 12);
    expect(v).toBeCloseTo(5 * 2.0, 12);
  });

  it("maps the canvas origin half a voxel before the first center", () => {
    const [u, v] = pointerToSliceMm(GEOM, 0, 0);
    expect(u).toBeCloseTo(-0.5 * 1.0, 12);
    expect(v).toBeCloseTo(-0.5 * 2.0, 12);
  });

  it("is inverted by sliceMmToCanvas", () => {
    for (const [px, py] of [[17, 33], [0, 0], [239, 199], [120.5, 88.25]]) {
      const [u, v] = pointerToSliceMm(GEOM, px, py);
      const [bx, by] = sliceMmToCanvas(GEOM, u, v);
      expect(bx).toBeCloseTo(px, 9);
      expect(by).toBeCloseTo(py, 9);
    }
  });

  it("uses the in-plane axes of the chosen orientation", () => {
    const sagittal: SliceGeometry = { ...GEOM, axis: "sagittal",
                                      canvasWidth: 200, canvasHeight: 160 };
    // sagittal plane axes are (y, z) with spacing (2, 3)
    const [u, v] = pointerToSliceMm(sagittal, 25, 15);
    expect(u).toBeCloseTo((25 / 200 * 20 - 0.5) * 2.0, 12);
    expect(v).toBeCloseTo((15 / 160 * 16 - 0.5) * 3.0, 12);
  });
});

describe("disc stroke construction", () => {
  it("converts a recorded path and carries slice identity", () => {
    const stroke = pathToDiscStroke(GEOM, [[35, 55], [45, 55]], 7, 2.5,
                                    "paint", 1234, 3);
    expect(stroke.tool).toBe("disc2d");
    expect(stroke.axis).toBe("transverse");
    expect(stroke.slice).toBe(7);
    expect(stroke.radius_mm).toBe(2.5);
    expect(stroke.maskVersion).toBe(3);
    expect(stroke.path[0][0]).toBeCloseTo(3.0, 12);
    expect(stroke.path[1][0]).toBeCloseTo(4.0, 12);
  });

  it("rejects an empty path", () => {
    expect(() => pathToDiscStroke(GEOM, [], 0, 1, "paint", 0)).toThrow();
  });
});

describe("orbit camera", () => {
  it("looks inward at the center from the azimuth/elevation direction", () => {
    const cam = orbitCamera([10, 10, 10], 50, 0, 0);
    expect(cam.position[0]).toBeCloseTo(60, 12);
    expect(cam.position[1]).toBeCloseTo(10, 12);
    expect(cam.view[0]).toBeCloseTo(-1, 12);
    expect(cam.up[2]).toBeCloseTo(1, 12);
  });

  it("keeps up perpendicular to view at high elevation", () => {
    const cam = orbitCamera([0, 0, 0], 10, 40, 80);
    const dot = cam.view[0] * cam.up[0] + cam.view[1] * cam.up[1]
      + cam.view[2] * cam.up[2];
    expect(dot).toBeCloseTo(0, 12);
  });

  it("projects the canvas center point straight down the view ray", () => {
    const cam = orbitCamera([5, 5, 5], 30, 30, 20);
    const p = previewPointToWorldMm(cam, 128, 128, 256, 40, 30);
    expect(p[0]).toBeCloseTo(5, 9);
    expect(p[1]).toBeCloseTo(5, 9);
    expect(p[2]).toBeCloseTo(5, 9);
  });

  it("moves right on the image for +u offsets", () => {
    const cam = orbitCamera([0, 0, 0], 20, 0, 0);
    const p = previewPointToWorldMm(cam, 256, 128, 256, 10, 20);
    // +u at azimuth 0: right = view x up = (-1,0,0) x (0,0,1) = (0,1,0)
    expect(p[1]).toBeCloseTo(5, 9);
    expect(p[0]).toBeCloseTo(0, 9);
  });
});
