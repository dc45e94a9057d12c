"""Batch front door: import, render, slice export, scripted contouring,
interpolation, scoring, gaze reports, phantom generation and `serve`.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from . import phantoms
from .annotate import BrushStroke, LabelVolume, apply_stroke, load_mask, save_mask
from .contours import contour_set
from .errors import ContourKitError
from .interp import interpolate_slices
from .metrics import attention_csv, dsc, gaze_report, metrics_summary
from .render import Camera, render_image, save_png
from .session import load_session
from .transfer import RGBA, TransferFunction, grayscale_ramp
from .volume import (Axis, DensityWindow, Volume, apply_window, extract_slice,
                     load_volume, normalize_minmax, save_volume)

USAGE_EXIT = 1
DATA_EXIT = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def _triple(s: str) -> tuple[float, float, float]:
    parts = [float(x) for x in s.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {s!r}")
    return tuple(parts)


def _pair(s: str) -> tuple[float, float]:
    parts = [float(x) for x in s.split(",")]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected lo,hi, got {s!r}")
    return tuple(parts)


def _size(s: str) -> tuple[int, int]:
    try:
        w, h = (int(x) for x in s.lower().split("x"))
        return w, h
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {s!r}")


def _int_list(s: str) -> list[int]:
    return [int(x) for x in s.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="contourkit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    imp = sub.add_parser("import", help="stack 2D slice images (or raw+meta) into a volume pair")
    imp.add_argument("input", help="directory of grayscale PNGs, or a volume .json to re-import")
    imp.add_argument("--out", required=True, help="output volume base path")
    imp.add_argument("--spacing", type=_triple, default=(1.0, 1.0, 1.0))
    imp.add_argument("--dtype", choices=("f32", "u16"), default="f32")
    imp.add_argument("--json", action="store_true")

    ph = sub.add_parser("phantom", help="generate a synthetic phantom project")
    ph.add_argument("--kind", choices=("cube", "ellipsoid", "gradient"), required=True)
    ph.add_argument("--out", required=True, help="output directory")
    ph.add_argument("--dims", type=lambda s: tuple(int(x) for x in s.split(",")),
                    default=None)
    ph.add_argument("--spacing", type=_triple, default=(1.0, 1.0, 1.0))
    ph.add_argument("--scripts", action="store_true",
                    help="also emit the scripted slice-wise and mixed contouring workflows (ellipsoid)")
    ph.add_argument("--json", action="store_true")

    ren = sub.add_parser("render", help="direct volume rendering to PNG")
    ren.add_argument("--volume", required=True)
    ren.add_argument("--mask")
    ren.add_argument("--tf", help="transfer function JSON (default: grayscale ramp)")
    ren.add_argument("--window", type=_pair, default=(0.0, 1.0))
    ren.add_argument("--pos", type=_triple, required=True)
    ren.add_argument("--look", type=_triple, required=True)
    ren.add_argument("--up", type=_triple, default=(0.0, 0.0, 1.0))
    ren.add_argument("--size", type=_size, default=(256, 256))
    ren.add_argument("--width", type=float, required=True, help="image plane width in mm")
    ren.add_argument("--steps", type=int, default=256)
    ren.add_argument("--threads", type=int, default=1)
    ren.add_argument("--tint", type=lambda s: RGBA(*[float(x) for x in s.split(",")]),
                     default=RGBA(1.0, 0.2, 0.1, 0.5))
    ren.add_argument("--out", required=True)

    sl = sub.add_parser("slice", help="export one slice as PNG (grayscale + mask tint)")
    sl.add_argument("--volume", required=True)
    sl.add_argument("--mask")
    sl.add_argument("--axis", default="transverse")
    sl.add_argument("--index", type=int, required=True)
    sl.add_argument("--window", type=_pair, default=(0.0, 1.0))
    sl.add_argument("--out", required=True)

    pa = sub.add_parser("paint", help="apply a stroke script (or workflow) to a mask")
    pa.add_argument("--volume", required=True)
    pa.add_argument("--mask", required=True, help="mask file (created if missing)")
    pa.add_argument("--script", required=True,
                    help="JSON: list of strokes, or {steps:[...]} workflow")
    pa.add_argument("--json", action="store_true")

    it = sub.add_parser("interp", help="inter-slice interpolation on a mask file")
    it.add_argument("--mask", required=True)
    it.add_argument("--axis", default="transverse")
    it.add_argument("--keys", type=_int_list, required=True)
    it.add_argument("--out", help="output mask (default: in place)")
    it.add_argument("--json", action="store_true")

    sc = sub.add_parser("score", help="Dice similarity coefficient of two masks")
    sc.add_argument("--mask", required=True)
    sc.add_argument("--against", required=True)
    sc.add_argument("--json", action="store_true")

    gz = sub.add_parser("gaze", help="attention report from a session log")
    gz.add_argument("--session", required=True)
    gz.add_argument("--out", help="CSV output path (default: stdout)")
    gz.add_argument("--threshold", type=float, default=150.0)
    gz.add_argument("--json", action="store_true", help="print the metrics summary JSON")

    co = sub.add_parser("contours", help="export per-slice contour polygons as JSON")
    co.add_argument("--mask", required=True)
    co.add_argument("--axis", default="transverse")
    co.add_argument("--spacing", type=_triple, default=(1.0, 1.0, 1.0))
    co.add_argument("--out", help="output JSON path (default: stdout)")

    sv = sub.add_parser("serve", help="start the HTTP contouring service")
    sv.add_argument("--config", help="JSON config file: {port, dataDir}")
    sv.add_argument("--port", type=int)
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--data-dir")
    sv.add_argument("--static-dir", help="serve a built web UI from this directory")
    return p


# -- command bodies ---------------------------------------------------------

def _load_slice_stack(directory: Path) -> np.ndarray:
    files = sorted(x for x in directory.iterdir()
                   if x.suffix.lower() in (".png", ".tif", ".tiff", ".bmp"))
    if not files:
        raise ContourKitError(f"no slice images in {directory}")
    planes = []
    for f in files:
        img = Image.open(f)
        arr = np.asarray(img)
        if arr.ndim == 3:
            arr = arr[..., 0]
        planes.append(arr)
    shape0 = planes[0].shape
    for f, a in zip(files, planes):
        if a.shape != shape0:
            raise ContourKitError(
                f"inconsistent slice sizes: {f.name} is {a.shape}, expected {shape0}")
    # image rows are y, columns are x; stack z last
    raw = np.stack([p.T for p in planes], axis=2)
    return raw.astype(np.float64)


def cmd_import(args) -> int:
    src = Path(args.input)
    if src.is_dir():
        raw = _load_slice_stack(src)
    else:
        raw_vol = load_volume(src)
        raw = raw_vol.densities.astype(np.float64)
        args.spacing = raw_vol.spacing
    vol = normalize_minmax(raw, spacing=args.spacing)
    save_volume(vol, args.out, dtype=args.dtype)
    info = {"dims": list(vol.dims), "spacing_mm": list(vol.spacing),
            "raw_range": list(vol.raw_range)}
    if args.json:
        print(json.dumps(info))
    else:
        print(f"dims: {vol.dims}  spacing: {vol.spacing} mm  raw range: {vol.raw_range}")
    return 0


def cmd_phantom(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    presets = phantoms.preset_tfs()
    if args.kind == "cube":
        n = args.dims[0] if args.dims else 32
        vol, ref = phantoms.cube_phantom(n, args.spacing)
        tf = presets["cube"]
    elif args.kind == "ellipsoid":
        dims = args.dims or (64, 64, 48)
        vol, ref = phantoms.ellipsoid_phantom(dims, args.spacing)
        tf = presets["ellipsoid"]
    else:
        dims = args.dims or (8, 8, 8)
        vol = phantoms.gradient_volume(dims, args.spacing)
        ref = LabelVolume(vol.dims)
        tf = presets["default"]
    save_volume(vol, out / "volume")
    save_mask(ref, out / "reference.mask.json")
    save_mask(LabelVolume(vol.dims), out / "user.mask.json")
    tf.save(out / "tf.json")
    meta = {
        "version": 1, "id": out.name, "volume": "volume.json",
        "masks": {"reference": "reference.mask.json", "user": "user.mask.json"},
        "transfer_function": "tf.json",
        "window": {"lo": 0.0, "hi": 1.0},
        "pose": {"translation": [0, 0, 0], "rotation": [1, 0, 0, 0], "scale": 1.0},
        "session_log": "session.jsonl",
    }
    (out / "project.json").write_text(json.dumps(meta, indent=2) + "\n")
    written = ["volume.json", "volume.raw", "reference.mask.json", "user.mask.json",
               "tf.json", "project.json"]
    if args.scripts:
        if args.kind != "ellipsoid":
            raise ContourKitError("--scripts is only meaningful for the ellipsoid phantom")
        extent = np.asarray(vol.world_extent)
        center = extent / 2.0
        semi = extent * 0.35
        slicewise = phantoms.slicewise_workflow(vol, semi, center)
        mixed = phantoms.mixed_workflow(vol, semi, center)
        (out / "slicewise_workflow.json").write_text(json.dumps(slicewise) + "\n")
        (out / "mixed_workflow.json").write_text(json.dumps(mixed) + "\n")
        written += ["slicewise_workflow.json", "mixed_workflow.json"]
    if args.json:
        print(json.dumps({"out": str(out), "files": written, "dims": list(vol.dims)}))
    else:
        print(f"wrote {args.kind} phantom project to {out} ({', '.join(written)})")
    return 0


def _load_mask_or_empty(path: str, vol: Volume) -> LabelVolume:
    p = Path(path)
    if p.exists():
        return load_mask(p)
    return LabelVolume(vol.dims)


def cmd_render(args) -> int:
    vol = load_volume(args.volume)
    mask = load_mask(args.mask) if args.mask else None
    tf = TransferFunction.load(args.tf) if args.tf else grayscale_ramp()
    cam = Camera.from_look_at(args.pos, args.look, args.up, args.size, args.width)
    img = render_image(vol, mask, tf, DensityWindow(*args.window), cam,
                       args.tint, steps=args.steps, threads=args.threads)
    save_png(img, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_slice(args) -> int:
    vol = load_volume(args.volume)
    axis = Axis.parse(args.axis)
    sl = extract_slice(vol, axis, args.index)
    gray = apply_window(sl.grid.astype(np.float64), DensityWindow(*args.window))
    rgb = np.repeat(gray[:, :, None], 3, axis=2)
    if args.mask:
        mask = load_mask(args.mask)
        from .annotate import mask_slice
        bits = mask_slice(mask, axis, args.index)
        tint = np.array([1.0, 0.2, 0.1])
        rgb[bits] = rgb[bits] * 0.5 + tint[None, :] * 0.5
    img = np.concatenate([rgb, np.ones_like(gray)[:, :, None]], axis=2)
    save_png(np.transpose(img, (1, 0, 2)), args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_paint(args) -> int:
    vol = load_volume(args.volume)
    mask = _load_mask_or_empty(args.mask, vol)
    script = json.loads(Path(args.script).read_text())
    if isinstance(script, dict) and "steps" in script:
        phantoms.run_workflow(mask, vol, script)
        n = sum(len(s.get("strokes", [])) for s in script["steps"])
    else:
        for obj in script:
            apply_stroke(mask, vol, BrushStroke.from_json(obj))
        n = len(script)
    save_mask(mask, args.mask)
    if args.json:
        print(json.dumps({"strokes": n, "voxels": mask.count()}))
    else:
        print(f"applied {n} strokes; {mask.count()} voxels set")
    return 0


def cmd_interp(args) -> int:
    mask = load_mask(args.mask)
    interpolate_slices(mask, Axis.parse(args.axis), args.keys)
    out = args.out or args.mask
    save_mask(mask, out)
    if args.json:
        print(json.dumps({"out": out, "voxels": mask.count()}))
    else:
        print(f"interpolated {args.keys} -> {out}")
    return 0


def cmd_score(args) -> int:
    a = load_mask(args.mask)
    b = load_mask(args.against)
    value = dsc(a, b)
    if args.json:
        print(json.dumps({"dsc": value}))
    else:
        print(f"{value:.4f}")
    return 0


def cmd_gaze(args) -> int:
    record = load_session(args.session)
    if args.json:
        print(json.dumps(metrics_summary(record, args.threshold)))
        return 0
    series = gaze_report(record, args.threshold)
    csv = attention_csv(series)
    if args.out:
        Path(args.out).write_text(csv)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(csv)
    return 0


def cmd_contours(args) -> int:
    mask = load_mask(args.mask)
    obj = contour_set(mask, Axis.parse(args.axis), args.spacing)
    text = json.dumps(obj)
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def cmd_serve(args) -> int:
    from .service import serve_forever
    config = {}
    if args.config:
        config = json.loads(Path(args.config).read_text())
    port = args.port if args.port is not None else \
        int(os.environ.get("PORT", config.get("port", 8787)))
    data_dir = args.data_dir or os.environ.get("DATA_DIR") or config.get("dataDir") or "."
    serve_forever(data_dir, args.host, port, args.static_dir)
    return 0


_COMMANDS = {
    "import": cmd_import,
    "phantom": cmd_phantom,
    "render": cmd_render,
    "slice": cmd_slice,
    "paint": cmd_paint,
    "interp": cmd_interp,
    "score": cmd_score,
    "gaze": cmd_gaze,
    "contours": cmd_contours,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ContourKitError as e:
        print(f"error: {e}", file=sys.stderr)
        return DATA_EXIT
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
