/** End-to-end: the UI's gesture -> stroke pipeline against the real service.
 *
 * Spawns the Python service on a phantom project, drives it exactly the way
 * the browser client does (same conversion code), and checks the server's
 * slice image changed in precisely the brush footprint.
 */

import { ChildProcess, execFileSync, spawn } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { PNG } from "pngjs";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, ConflictError, formatDsc } from "../src/api.js";
import {
  orbitCamera, pathToDiscStroke, previewPointToWorldMm, SliceGeometry,
  sphereStrokeAt,
} from "../src/gesture.js";

const PYTHON = process.env.PYTHON ?? "python3";
const PORT = 21000 + Math.floor(Math.random() * 2000);
const BASE = `http://127.0.0.1:${PORT}`;

let dataDir: string;
let proc: ChildProcess;
let api: ApiClient;

const DIMS: [number, number, number] = [24, 24, 20];

async function waitForServer(timeoutMs = 30000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const resp = await fetch(`${BASE}/projects`);
      if (resp.ok) return;
    } catch {
      await new Promise((r) => setTimeout(r, 150));
    }
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  dataDir = mkdtempSync(join(tmpdir(), "contourkit-ui-"));
  execFileSync(PYTHON, [
    "-m", "contourkit.cli", "phantom", "--kind", "ellipsoid",
    "--dims", DIMS.join(","), "--out", join(dataDir, "demo"),
  ]);
  proc = spawn(PYTHON, [
    "-m", "contourkit.cli", "serve", "--port", String(PORT),
    "--data-dir", dataDir,
  ], { stdio: "ignore" });
  await waitForServer();
  api = new ApiClient(BASE);
}, 60000);

afterAll(() => {
  proc?.kill("SIGINT");
  rmSync(dataDir, { recursive: true, force: true });
});

function decodePng(bytes: Uint8Array): PNG {
  return PNG.sync.read(Buffer.from(bytes));
}

/** Pixels whose RGBA changed between two equally-sized PNGs. */
function changedPixels(before: PNG, after: PNG): Set<string> {
  const out = new Set<string>();
  for (let row = 0; row < before.height; row++) {
    for (let col = 0; col < before.width; col++) {
      const i = (row * before.width + col) * 4;
      for (let c = 0; c < 4; c++) {
        if (before.data[i + c] !== after.data[i + c]) {
          out.add(`${col},${row}`);
          break;
        }
      }
    }
  }
  return out;
}

describe("stroke end-to-end", () => {
  it("a recorded pointer path changes the slice exactly in the brush footprint",
     async () => {
    const meta = await api.getProject("demo");
    expect(meta.dims).toEqual(DIMS);
    const sliceIndex = 10;
    const geom: SliceGeometry = {
      dims: meta.dims,
      spacingMm: meta.spacing_mm,
      axis: "transverse",
      canvasWidth: meta.dims[0] * 10,
      canvasHeight: meta.dims[1] * 10,
    };
    const window = { lo: 0, hi: 1 };
    const urlBefore = api.sliceUrl("demo", "transverse", sliceIndex, window, 0);
    const before = decodePng(await api.fetchPng(urlBefore));

    // recorded pointer path: three voxel centers one voxel apart, so the
    // stamp chain adds nothing between them (spacing <= radius/2)
    const canvasPath: [number, number][] = [
      [10.5 * 10, 9.5 * 10],
      [11.5 * 10, 9.5 * 10],
      [12.5 * 10, 9.5 * 10],
    ];
    const stroke = pathToDiscStroke(geom, canvasPath, sliceIndex, 2.5,
                                    "paint", 1000, meta.maskVersion);
    const version = await api.postStroke("demo", stroke);
    expect(version).toBe(meta.maskVersion + 1);

    const urlAfter = api.sliceUrl("demo", "transverse", sliceIndex, window, version);
    const after = decodePng(await api.fetchPng(urlAfter));

    // oracle: voxel centers within radius of any recorded stamp center
    const expected = new Set<string>();
    for (let i = 0; i < DIMS[0]; i++) {
      for (let j = 0; j < DIMS[1]; j++) {
        const inside = stroke.path.some(([cu, cv]) => {
          const du = i * meta.spacing_mm[0] - cu;
          const dv = j * meta.spacing_mm[1] - cv;
          return du * du + dv * dv <= stroke.radius_mm * stroke.radius_mm;
        });
        // slice PNG: column = first in-plane axis, row = second
        if (inside) expected.add(`${i},${j}`);
      }
    }
    expect(expected.size).toBeGreaterThan(10);
    expect(changedPixels(before, after)).toEqual(expected);

    // other slices untouched
    const neighborBefore = decodePng(await api.fetchPng(
      api.sliceUrl("demo", "transverse", sliceIndex + 1, window, 0)));
    const neighborAfter = decodePng(await api.fetchPng(
      api.sliceUrl("demo", "transverse", sliceIndex + 1, window, version)));
    expect(changedPixels(neighborBefore, neighborAfter).size).toBe(0);
  }, 30000);

  it("a stale maskVersion is rejected with a conflict and recovers on refresh",
     async () => {
    const geom: SliceGeometry = {
      dims: DIMS, spacingMm: [1, 1, 1], axis: "transverse",
      canvasWidth: 240, canvasHeight: 240,
    };
    const stale = pathToDiscStroke(geom, [[120, 120]], 5, 1.5, "paint", 2000, 0);
    await expect(api.postStroke("demo", stale)).rejects.toThrow(ConflictError);
    const meta = await api.getProject("demo");
    const fresh = pathToDiscStroke(geom, [[120, 120]], 5, 1.5, "paint", 2100,
                                   meta.maskVersion);
    await expect(api.postStroke("demo", fresh)).resolves.toBe(meta.maskVersion + 1);
  }, 30000);

  it("interpolation fills a slice between two painted keys", async () => {
    let meta = await api.getProject("demo");
    const geom: SliceGeometry = {
      dims: DIMS, spacingMm: meta.spacing_mm, axis: "transverse",
      canvasWidth: 240, canvasHeight: 240,
    };
    let version = meta.maskVersion;
    for (const key of [2, 8]) {
      const stroke = pathToDiscStroke(geom, [[120, 120]], key, 4.0, "paint",
                                      3000 + key, version);
      version = await api.postStroke("demo", stroke);
    }
    const window = { lo: 0, hi: 1 };
    const midBefore = decodePng(await api.fetchPng(
      api.sliceUrl("demo", "transverse", 5, window, version)));
    version = await api.postInterp("demo", "transverse", [2, 8], version);
    const midAfter = decodePng(await api.fetchPng(
      api.sliceUrl("demo", "transverse", 5, window, version)));
    expect(changedPixels(midBefore, midAfter).size).toBeGreaterThan(0);
  }, 30000);

  it("a sphere gesture on the 3D preview shows up as a disc on the slice",
     async () => {
    const meta = await api.getProject("demo");
    const center: [number, number, number] = [
      ((DIMS[0] - 1) * meta.spacing_mm[0]) / 2,
      ((DIMS[1] - 1) * meta.spacing_mm[1]) / 2,
      ((DIMS[2] - 1) * meta.spacing_mm[2]) / 2,
    ];
    const extent = Math.max(...DIMS.map((n, i) => (n - 1) * meta.spacing_mm[i]));
    const distance = 4.0 * extent + 1.0;
    const cam = orbitCamera(center, distance, 45, 30);
    // click the middle of the preview with the depth slider at the volume
    // center: the brush lands at the phantom center
    const point = previewPointToWorldMm(cam, 128, 128, 256, extent * 1.5, distance);
    const stroke = sphereStrokeAt(point, 4.0, "paint", 4000, meta.maskVersion);
    const sliceIndex = 12;
    const window = { lo: 0, hi: 1 };
    const before = decodePng(await api.fetchPng(
      api.sliceUrl("demo", "transverse", sliceIndex, window, meta.maskVersion)));
    const version = await api.postStroke("demo", stroke);
    const after = decodePng(await api.fetchPng(
      api.sliceUrl("demo", "transverse", sliceIndex, window, version)));

    // sphere-plane intersection disc, radius^2 = r^2 - dz^2, from the
    // stroke's actual center
    const [cx, cy, cz] = stroke.path[0];
    const dz = sliceIndex * meta.spacing_mm[2] - cz;
    const rr = stroke.radius_mm * stroke.radius_mm - dz * dz;
    const expected = new Set<string>();
    for (let i = 0; i < DIMS[0]; i++) {
      for (let j = 0; j < DIMS[1]; j++) {
        const du = i * meta.spacing_mm[0] - cx;
        const dv = j * meta.spacing_mm[1] - cy;
        if (du * du + dv * dv <= rr) expected.add(`${i},${j}`);
      }
    }
    expect(expected.size).toBeGreaterThan(4);
    // only not-yet-painted voxels change the image; earlier tests painted
    // around the center, so restrict both sets to fresh pixels
    const diff = changedPixels(before, after);
    for (const key of diff) expect(expected.has(key)).toBe(true);
    expect(diff.size).toBeGreaterThan(0);
  }, 30000);

  it("undo returns the displays to the prior state", async () => {
    const meta = await api.getProject("demo");
    const window = { lo: 0, hi: 1 };
    const snap = await api.fetchPng(
      api.sliceUrl("demo", "transverse", 15, window, meta.maskVersion));
    const geom: SliceGeometry = {
      dims: DIMS, spacingMm: meta.spacing_mm, axis: "transverse",
      canvasWidth: 240, canvasHeight: 240,
    };
    const stroke = pathToDiscStroke(geom, [[60, 60]], 15, 3.0, "paint", 5000,
                                    meta.maskVersion);
    const v1 = await api.postStroke("demo", stroke);
    const v2 = await api.postUndo("demo");
    expect(v2).toBeGreaterThan(v1);
    const back = await api.fetchPng(
      api.sliceUrl("demo", "transverse", 15, window, v2));
    expect(Buffer.from(back).equals(Buffer.from(snap))).toBe(true);
  }, 30000);
});

describe("DSC readout", () => {
  it("matches the CLI score output to 4 decimals", async () => {
    const value = await api.getDsc("demo", "reference");
    const readout = formatDsc(value);
    const cli = execFileSync(PYTHON, [
      "-m", "contourkit.cli", "score",
      "--mask", join(dataDir, "demo", "user.mask.json"),
      "--against", join(dataDir, "demo", "reference.mask.json"),
    ]).toString().trim();
    expect(readout).toBe(cli);
    expect(readout).toMatch(/^\d\.\d{4}$/);
  }, 30000);

  it("metrics summary is served for the session log", async () => {
    await api.appendSessionEvents("demo", [
      { t: 0, kind: "anchor" },
      { t: 1000, kind: "gaze", dir: [0, 0, 1], hit: "volume" },
      { t: 9000, kind: "end" },
    ]);
    const metrics = await api.getMetrics("demo");
    // strokes were posted earlier in this suite, so the session completes
    expect(metrics.complete).toBe(true);
    expect(metrics.overall_tct_ms).not.toBeNull();
  }, 30000);
});
