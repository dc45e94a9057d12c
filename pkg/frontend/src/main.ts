/** DOM wiring for the contouring client.
 *
 * Single source of truth is the service: the slice image, 3D preview,
 * contour polygons and DSC all come back from HTTP responses keyed by the
 * current mask version. One mutation is in flight at a time; stale image
 * responses are dropped by sequence number.
 */

import { ApiClient, ConflictError, formatDsc } from "./api.js";
import type { AxisName } from "./api.js";
import {
  bumpMaskVersion, initialState, interpReadiness, planeAxes, setAxis,
  setSlice, sliceCount, stateFromHash, stateToHash, toggleBookmark, ViewState,
} from "./state.js";
import {
  orbitCamera, pathToDiscStroke, previewPointToWorldMm, sliceMmToCanvas,
  sphereStrokeAt, SliceGeometry,
} from "./gesture.js";

const PREVIEW_SIZE = 256;
const SLICE_SCALE = 8;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

class App {
  api = new ApiClient(window.location.origin);
  state!: ViewState;
  sliceSeq = 0;
  previewSeq = 0;
  busy = false;
  pointerPath: [number, number][] = [];
  drawing = false;
  sessionStart = Date.now();

  canvas = el<HTMLCanvasElement>("slice-canvas");
  preview = el<HTMLCanvasElement>("preview-canvas");
  toast = el<HTMLDivElement>("toast");

  geometry(): SliceGeometry {
    return {
      dims: this.state.dims,
      spacingMm: this.state.spacingMm,
      axis: this.state.axis,
      canvasWidth: this.canvas.width,
      canvasHeight: this.canvas.height,
    };
  }

  notify(message: string) {
    this.toast.textContent = message;
    this.toast.classList.add("visible");
    setTimeout(() => this.toast.classList.remove("visible"), 2500);
  }

  nowMs(): number {
    return Date.now() - this.sessionStart;
  }

  async start() {
    const link = stateFromHash(window.location.hash);
    const ids = await this.api.listProjects();
    if (ids.length === 0) {
      this.notify("no projects in the data directory");
      return;
    }
    const projectId = link && ids.includes(link.projectId) ? link.projectId : ids[0];
    const meta = await this.api.getProject(projectId);
    this.state = initialState(projectId, meta.dims, meta.spacing_mm,
                              meta.window, meta.maskVersion);
    if (link && link.projectId === projectId) {
      this.state = setAxis(this.state, link.axis);
      this.state = setSlice(this.state, link.sliceIndex);
      if (link.window.lo < link.window.hi) this.state.window = link.window;
    }
    this.api.appendSessionEvents(projectId, [{ t: this.nowMs(), kind: "anchor" }])
      .catch(() => undefined);
    this.bindControls();
    this.syncAll();
  }

  // -- rendering ------------------------------------------------------------

  syncHash() {
    const hash = stateToHash(this.state);
    if (window.location.hash !== hash) window.history.replaceState(null, "", hash);
  }

  async syncAll() {
    this.syncHash();
    this.updateControls();
    await Promise.all([this.refreshSlice(), this.refreshPreview(), this.refreshDsc()]);
  }

  async refreshSlice() {
    const seq = ++this.sliceSeq;
    const s = this.state;
    const [a1, a2] = planeAxes(s.axis);
    const url = this.api.sliceUrl(s.projectId, s.axis, s.sliceIndex, s.window,
                                  s.maskVersion);
    const img = new Image();
    img.src = url;
    try {
      await img.decode();
    } catch {
      return;
    }
    if (seq !== this.sliceSeq) return; // stale
    this.canvas.width = s.dims[a1] * SLICE_SCALE;
    this.canvas.height = s.dims[a2] * SLICE_SCALE;
    const ctx = this.canvas.getContext("2d")!;
    ctx.imageSmoothingEnabled = false;
    ctx.drawImage(img, 0, 0, this.canvas.width, this.canvas.height);
    await this.drawContours(ctx, seq);
  }

  async drawContours(ctx: CanvasRenderingContext2D, seq: number) {
    let contours;
    try {
      contours = await this.api.getContours(this.state.projectId, this.state.axis);
    } catch {
      return;
    }
    if (seq !== this.sliceSeq) return;
    const entry = contours.slices.find((x) => x.slice === this.state.sliceIndex);
    if (!entry) return;
    const g = this.geometry();
    ctx.strokeStyle = "#ffe100";
    ctx.lineWidth = 1.5;
    for (const poly of entry.polygons) {
      ctx.beginPath();
      poly.forEach(([mu, mv], i) => {
        const [cx, cy] = sliceMmToCanvas(g, mu, mv);
        if (i === 0) ctx.moveTo(cx, cy);
        else ctx.lineTo(cx, cy);
      });
      ctx.stroke();
    }
  }

  async refreshPreview() {
    const seq = ++this.previewSeq;
    const s = this.state;
    const url = this.api.renderUrl(s.projectId, s.orbit, PREVIEW_SIZE, s.window,
                                   s.maskVersion);
    const img = new Image();
    img.src = url;
    try {
      await img.decode();
    } catch {
      return;
    }
    if (seq !== this.previewSeq) return;
    this.preview.width = PREVIEW_SIZE;
    this.preview.height = PREVIEW_SIZE;
    this.preview.getContext("2d")!.drawImage(img, 0, 0);
  }

  async refreshDsc() {
    try {
      const value = await this.api.getDsc(this.state.projectId);
      this.state = { ...this.state, dsc: value };
      el<HTMLSpanElement>("dsc-value").textContent = formatDsc(value);
    } catch {
      el<HTMLSpanElement>("dsc-value").textContent = "n/a";
    }
  }

  updateControls() {
    const s = this.state;
    el<HTMLInputElement>("slice-slider").max = String(sliceCount(s) - 1);
    el<HTMLInputElement>("slice-slider").value = String(s.sliceIndex);
    el<HTMLSpanElement>("slice-label").textContent =
      `${s.axis} ${s.sliceIndex + 1}/${sliceCount(s)}`;
    el<HTMLInputElement>("window-lo").value = String(s.window.lo);
    el<HTMLInputElement>("window-hi").value = String(s.window.hi);
    el<HTMLSpanElement>("window-label").textContent =
      `[${s.window.lo.toFixed(2)}, ${s.window.hi.toFixed(2)}]`;
    el<HTMLInputElement>("brush-radius").value = String(s.brush.radiusMm);
    el<HTMLSpanElement>("radius-label").textContent = `${s.brush.radiusMm.toFixed(1)} mm`;
    el<HTMLSpanElement>("bookmark-list").textContent =
      s.bookmarks.length ? s.bookmarks.join(", ") : "none";
    const ready = interpReadiness(s);
    const button = el<HTMLButtonElement>("interp-button");
    button.disabled = !ready.enabled || this.busy;
    el<HTMLSpanElement>("interp-reason").textContent = ready.reason ?? "";
    el<HTMLInputElement>("depth-slider").value = String(s.depthMm);
  }

  // -- mutations ------------------------------------------------------------

  async mutate(run: () => Promise<number>) {
    if (this.busy) {
      this.notify("another edit is still in flight");
      return;
    }
    this.busy = true;
    this.updateControls();
    try {
      const version = await run();
      this.state = bumpMaskVersion(this.state, version);
    } catch (err) {
      if (err instanceof ConflictError) {
        const meta = await this.api.getProject(this.state.projectId);
        this.state = bumpMaskVersion(this.state, meta.maskVersion);
        this.notify("edit conflicted with a newer change; state refreshed");
      } else {
        this.notify(`edit failed: ${(err as Error).message}`);
      }
    } finally {
      this.busy = false;
      await this.syncAll();
    }
  }

  commitPointerPath() {
    if (this.pointerPath.length === 0) return;
    const path = this.pointerPath;
    this.pointerPath = [];
    const s = this.state;
    const stroke = pathToDiscStroke(this.geometry(), path, s.sliceIndex,
                                    s.brush.radiusMm, s.brush.mode, this.nowMs(),
                                    s.maskVersion);
    this.api.appendSessionEvents(s.projectId, [
      { t: stroke.t, kind: "slice_change", axis: s.axis, index: s.sliceIndex },
    ]).catch(() => undefined);
    void this.mutate(() => this.api.postStroke(s.projectId, stroke));
  }

  // -- event bindings ---------------------------------------------------------

  bindControls() {
    const canvasPoint = (ev: PointerEvent): [number, number] => {
      const rect = this.canvas.getBoundingClientRect();
      return [
        ((ev.clientX - rect.left) / rect.width) * this.canvas.width,
        ((ev.clientY - rect.top) / rect.height) * this.canvas.height,
      ];
    };
    this.canvas.addEventListener("pointerdown", (ev) => {
      this.drawing = true;
      this.canvas.setPointerCapture(ev.pointerId);
      this.pointerPath = [canvasPoint(ev)];
    });
    this.canvas.addEventListener("pointermove", (ev) => {
      if (this.drawing) this.pointerPath.push(canvasPoint(ev));
    });
    this.canvas.addEventListener("pointerup", () => {
      this.drawing = false;
      this.commitPointerPath(); // the contour commits when the pen lifts
    });
    this.canvas.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      this.state = setSlice(this.state, this.state.sliceIndex + Math.sign(ev.deltaY));
      void this.syncAll();
    }, { passive: false });

    el<HTMLInputElement>("slice-slider").addEventListener("input", (ev) => {
      this.state = setSlice(this.state, Number((ev.target as HTMLInputElement).value));
      void this.syncAll();
    });
    for (const axis of ["transverse", "sagittal", "coronal"] as AxisName[]) {
      el<HTMLButtonElement>(`axis-${axis}`).addEventListener("click", () => {
        this.state = setAxis(this.state, axis);
        void this.syncAll();
      });
    }
    const windowChanged = () => {
      const lo = Number(el<HTMLInputElement>("window-lo").value);
      const hi = Number(el<HTMLInputElement>("window-hi").value);
      if (lo < hi) {
        this.state = { ...this.state, window: { lo, hi } };
        void this.syncAll();
      }
    };
    el<HTMLInputElement>("window-lo").addEventListener("change", windowChanged);
    el<HTMLInputElement>("window-hi").addEventListener("change", windowChanged);

    el<HTMLInputElement>("brush-radius").addEventListener("input", (ev) => {
      const radiusMm = Number((ev.target as HTMLInputElement).value);
      this.state = { ...this.state, brush: { ...this.state.brush, radiusMm } };
      this.updateControls();
    });
    el<HTMLSelectElement>("brush-mode").addEventListener("change", (ev) => {
      const mode = (ev.target as HTMLSelectElement).value as "paint" | "erase";
      this.state = { ...this.state, brush: { ...this.state.brush, mode } };
    });
    el<HTMLButtonElement>("undo-button").addEventListener("click", () => {
      void this.mutate(() => this.api.postUndo(this.state.projectId));
    });

    el<HTMLButtonElement>("bookmark-button").addEventListener("click", () => {
      this.state = toggleBookmark(this.state);
      this.updateControls();
    });
    el<HTMLButtonElement>("interp-button").addEventListener("click", () => {
      const ready = interpReadiness(this.state);
      if (!ready.enabled) return;
      const s = this.state;
      void this.mutate(() =>
        this.api.postInterp(s.projectId, s.axis, ready.keys, s.maskVersion));
    });

    el<HTMLInputElement>("depth-slider").addEventListener("input", (ev) => {
      this.state = { ...this.state, depthMm: Number((ev.target as HTMLInputElement).value) };
    });

    let orbiting = false;
    let last: [number, number] = [0, 0];
    let moved = 0;
    this.preview.addEventListener("pointerdown", (ev) => {
      orbiting = true;
      moved = 0;
      last = [ev.clientX, ev.clientY];
      this.preview.setPointerCapture(ev.pointerId);
    });
    this.preview.addEventListener("pointermove", (ev) => {
      if (!orbiting) return;
      const dx = ev.clientX - last[0];
      const dy = ev.clientY - last[1];
      moved += Math.abs(dx) + Math.abs(dy);
      last = [ev.clientX, ev.clientY];
      const orbit = {
        ...this.state.orbit,
        azimuth: this.state.orbit.azimuth - dx * 0.8,
        elevation: Math.min(85, Math.max(-85, this.state.orbit.elevation + dy * 0.8)),
      };
      this.state = { ...this.state, orbit };
    });
    this.preview.addEventListener("pointerup", (ev) => {
      orbiting = false;
      if (moved < 4) this.spherePaintAt(ev);
      else void this.refreshPreview();
    });
  }

  spherePaintAt(ev: PointerEvent) {
    const s = this.state;
    const rect = this.preview.getBoundingClientRect();
    const px = ((ev.clientX - rect.left) / rect.width) * PREVIEW_SIZE;
    const py = ((ev.clientY - rect.top) / rect.height) * PREVIEW_SIZE;
    const center: [number, number, number] = [
      ((s.dims[0] - 1) * s.spacingMm[0]) / 2,
      ((s.dims[1] - 1) * s.spacingMm[1]) / 2,
      ((s.dims[2] - 1) * s.spacingMm[2]) / 2,
    ];
    const extent = Math.max(...s.dims.map((n, i) => (n - 1) * s.spacingMm[i]));
    const distance = 4.0 * extent + 1.0; // matches the service orbit camera
    const cam = orbitCamera(center, distance, s.orbit.azimuth, s.orbit.elevation);
    const point = previewPointToWorldMm(cam, px, py, PREVIEW_SIZE,
                                        s.orbit.worldWidth, distance + s.depthMm
                                        - extent / 2);
    const stroke = sphereStrokeAt(point, s.brush.radiusMm, s.brush.mode,
                                  this.nowMs(), s.maskVersion);
    void this.mutate(() => this.api.postStroke(s.projectId, stroke));
  }
}

if (typeof document !== "undefined" && document.getElementById("slice-canvas")) {
  const app = new App();
  app.start().catch((err) => {
    console.error(err);
    document.body.insertAdjacentText("beforeend", `failed to start: ${err}`);
  });
}
