"""Synthetic volumes, reference masks, classification presets, and scripted
contouring workflows.

The workflow scripts are deterministic stroke sequences generated from the
analytic phantom shape: a slice-wise workflow (disc strokes on a subset of
slices plus interpolation) and a mixed 2D+3D workflow (sphere strokes along
the structure, interpolation, then per-slice disc refinement).
"""

from __future__ import annotations

import math

import numpy as np

from .annotate import (BrushMode, BrushStroke, BrushTool, LabelVolume,
                       apply_stroke)
from .interp import interpolate_slices
from .transfer import TransferFunction, grayscale_ramp
from .volume import Axis, Volume


def gradient_volume(dims=(8, 8, 8), spacing=(1.0, 1.0, 1.0)) -> Volume:
    """Density equals z / (nz - 1): every transverse slice is uniform."""
    nx, ny, nz = dims
    z = np.broadcast_to(np.arange(nz, dtype=np.float32) / max(nz - 1, 1), dims)
    return Volume(tuple(dims), tuple(spacing), np.ascontiguousarray(z, dtype=np.float32),
                  (0.0, 1.0))


def cube_phantom(n=32, spacing=(1.0, 1.0, 1.0), frac=0.5) -> tuple[Volume, LabelVolume]:
    """Centered solid cube occupying ``frac`` of each axis; binary density."""
    dims = (n, n, n)
    half = frac * (n - 1) / 2.0
    mid = (n - 1) / 2.0
    idx = np.arange(n, dtype=np.float64)
    inside1d = np.abs(idx - mid) <= half
    inside = (inside1d[:, None, None] & inside1d[None, :, None] & inside1d[None, None, :])
    dens = inside.astype(np.float32)
    vol = Volume(dims, tuple(spacing), dens, (0.0, 1.0))
    return vol, LabelVolume(dims, inside)


def ellipsoid_phantom(
    dims=(64, 64, 48),
    spacing=(1.0, 1.0, 1.0),
    semi_axes_mm=None,
    center_mm=None,
) -> tuple[Volume, LabelVolume]:
    """Axis-aligned solid ellipsoid with an analytic reference mask."""
    dims = tuple(int(n) for n in dims)
    sp = np.asarray(spacing, dtype=np.float64)
    extent = (np.asarray(dims) - 1) * sp
    if center_mm is None:
        center_mm = extent / 2.0
    if semi_axes_mm is None:
        semi_axes_mm = extent * 0.35
    c = np.asarray(center_mm, dtype=np.float64)
    ax = np.asarray(semi_axes_mm, dtype=np.float64)
    xs = (np.arange(dims[0]) * sp[0] - c[0]) / ax[0]
    ys = (np.arange(dims[1]) * sp[1] - c[1]) / ax[1]
    zs = (np.arange(dims[2]) * sp[2] - c[2]) / ax[2]
    inside = (xs[:, None, None] ** 2 + ys[None, :, None] ** 2 + zs[None, None, :] ** 2) <= 1.0
    vol = Volume(dims, tuple(float(s) for s in sp), inside.astype(np.float32), (0.0, 1.0))
    return vol, LabelVolume(dims, inside)


def solid_tf(color=(0.9, 0.82, 0.72), threshold=0.5, hardness=0.05) -> TransferFunction:
    """Constant-color step classification: transparent below, opaque above."""
    c = tuple(color)
    return TransferFunction.from_points([
        (0.0, c, 0.0),
        (max(threshold - hardness, 1e-6), c, 0.0),
        (min(threshold + hardness, 1.0 - 1e-6), c, 1.0),
        (1.0, c, 1.0),
    ])


def preset_tfs() -> dict[str, TransferFunction]:
    return {
        "default": grayscale_ramp(),
        "cube": solid_tf((0.9, 0.82, 0.72)),
        "ellipsoid": solid_tf((0.55, 0.75, 0.95)),
    }


# ---------------------------------------------------------------------------
# Scripted condition workflows against the ellipsoid phantom.
# ---------------------------------------------------------------------------

def _ellipse_at(semi_axes, center, z_mm: float):
    """In-plane semi-axes of the ellipsoid's transverse cut; None when empty."""
    a, b, c = semi_axes
    w = 1.0 - ((z_mm - center[2]) / c) ** 2
    if w <= 0.0:
        return None
    return a * math.sqrt(w), b * math.sqrt(w)


def _disc_fits(cu, cv, r, ea, eb, cx, cy, angles=24) -> bool:
    th = np.linspace(0.0, 2.0 * math.pi, angles, endpoint=False)
    px = cu + r * np.cos(th) - cx
    py = cv + r * np.sin(th) - cy
    return bool(np.all((px / ea) ** 2 + (py / eb) ** 2 <= 1.0))


def _cover_ellipse_stamps(ea, eb, cx, cy, radius, pitch) -> list[tuple[float, float]]:
    """Serpentine stamp centers whose discs fit inside the ellipse."""
    stamps = []
    ny = max(1, int(math.ceil(2 * eb / pitch)))
    for row in range(ny + 1):
        v = cy - eb + row * (2 * eb / max(ny, 1))
        xs = np.arange(cx - ea, cx + ea + pitch / 2, pitch)
        if row % 2:
            xs = xs[::-1]
        for u in xs:
            if _disc_fits(u, v, radius, ea, eb, cx, cy):
                stamps.append((float(u), float(v)))
    return stamps


def _split_runs(points, max_gap: float) -> list[list[tuple[float, ...]]]:
    runs: list[list[tuple[float, ...]]] = []
    for p in points:
        if runs and math.dist(runs[-1][-1], p) <= max_gap:
            runs[-1].append(p)
        else:
            runs.append([p])
    return runs


def _voxel_fix_strokes(diff: np.ndarray, spacing2, axis: Axis, index: int,
                       mode: BrushMode, t_ms: float) -> list[BrushStroke]:
    """Single-voxel discs along raster runs of a per-slice error set."""
    radius = 0.45 * min(spacing2)
    us, vs = np.nonzero(diff)
    if len(us) == 0:
        return []
    order = np.lexsort((us, vs))
    points = [(float(us[i] * spacing2[0]), float(vs[i] * spacing2[1])) for i in order]
    strokes = []
    for run in _split_runs(points, max_gap=1.5 * max(spacing2)):
        strokes.append(BrushStroke(
            tool=BrushTool.DISC2D, mode=mode, radius_mm=radius,
            path=tuple(run), timestamp_ms=t_ms, axis=axis, slice_index=index))
    return strokes


def _ellipse_raster(dims2, spacing2, ea, eb, cx, cy) -> np.ndarray:
    us = np.arange(dims2[0], dtype=np.float64) * spacing2[0]
    vs = np.arange(dims2[1], dtype=np.float64) * spacing2[1]
    return (((us[:, None] - cx) / ea) ** 2 + ((vs[None, :] - cy) / eb) ** 2) <= 1.0


def slicewise_workflow(
    v: Volume,
    semi_axes_mm,
    center_mm,
    every: int = 4,
    radius_mm: float = 1.5,
) -> dict:
    """Slice-wise workflow: disc coverage of every ``every``-th slice + interpolation."""
    sp = v.spacing
    strokes: list[BrushStroke] = []
    keys: list[int] = []
    t = 0.0
    for k in range(0, v.dims[2], every):
        z = k * sp[2]
        cut = _ellipse_at(semi_axes_mm, center_mm, z)
        keys.append(k)
        if cut is None:
            continue
        ea, eb = cut
        r = min(radius_mm, 0.9 * min(ea, eb))
        if r < 0.3 * min(sp[0], sp[1]):
            continue
        stamps = _cover_ellipse_stamps(ea, eb, center_mm[0], center_mm[1], r, r / 2.0)
        if not stamps:
            continue
        t += 1000.0
        strokes.append(BrushStroke(
            tool=BrushTool.DISC2D, mode=BrushMode.PAINT, radius_mm=r,
            path=tuple(stamps), timestamp_ms=t,
            axis=Axis.TRANSVERSE, slice_index=k))
    return {"steps": [
        {"kind": "strokes", "strokes": [s.to_json() for s in strokes]},
        {"kind": "interp", "axis": "transverse", "keys": keys},
    ]}


def _max_sphere_radius(semi_axes, z_off: float) -> float:
    """Largest sphere centered z_off from the ellipsoid center, on its axis."""
    a, b, c = semi_axes
    m = min(a, b)
    phis = np.linspace(0.0, math.pi, 181)
    lo_r, hi_r = 0.0, min(m, c)
    for _ in range(40):
        r = (lo_r + hi_r) / 2.0
        zz = z_off + r * np.cos(phis)
        rr = r * np.sin(phis)
        val = (rr / m) ** 2 + (zz / c) ** 2
        if np.all(val <= 1.0):
            lo_r = r
        else:
            hi_r = r
    return lo_r


def mixed_workflow(
    v: Volume,
    semi_axes_mm,
    center_mm,
    stations: int = 7,
    refine_every: int = 1,
) -> dict:
    """Mixed workflow: sphere strokes in 3D, interpolation, then disc refinement.

    The refinement strokes are derived by simulating the first two steps on a
    scratch mask and diffing against the analytic cross-sections.
    """
    sp = v.spacing
    c = np.asarray(center_mm, dtype=np.float64)
    a, b, cz = semi_axes_mm
    offs = np.linspace(-0.8 * cz, 0.8 * cz, stations)
    sphere_path = []
    radii = []
    for off in offs:
        r = _max_sphere_radius(semi_axes_mm, float(off))
        if r <= 0.5 * min(sp):
            continue
        sphere_path.append((float(c[0]), float(c[1]), float(c[2] + off)))
        radii.append(r)
    strokes: list[BrushStroke] = []
    t = 0.0
    for p, r in zip(sphere_path, radii):
        t += 1000.0
        strokes.append(BrushStroke(
            tool=BrushTool.SPHERE3D, mode=BrushMode.PAINT, radius_mm=float(r),
            path=(p,), timestamp_ms=t))

    key_set = sorted({int(round(p[2] / sp[2])) for p in sphere_path})
    if len(key_set) < 2:
        key_set = [0, v.dims[2] - 1]

    # Simulate spheres + interpolation, then plan the per-slice fixes.
    scratch = LabelVolume(v.dims)
    for s in strokes:
        apply_stroke(scratch, v, s)
    interpolate_slices(scratch, Axis.TRANSVERSE, key_set, sp)

    refine: list[BrushStroke] = []
    sp2 = (sp[0], sp[1])
    for k in range(0, v.dims[2], refine_every):
        cut = _ellipse_at(semi_axes_mm, center_mm, k * sp[2])
        target = (np.zeros((v.dims[0], v.dims[1]), dtype=bool) if cut is None
                  else _ellipse_raster((v.dims[0], v.dims[1]), sp2, cut[0], cut[1],
                                       center_mm[0], center_mm[1]))
        have = scratch.bits[:, :, k]
        t += 500.0
        erases = _voxel_fix_strokes(have & ~target, sp2, Axis.TRANSVERSE, k,
                                    BrushMode.ERASE, t)
        paints = _voxel_fix_strokes(target & ~have, sp2, Axis.TRANSVERSE, k,
                                    BrushMode.PAINT, t)
        for s in erases + paints:
            apply_stroke(scratch, v, s)
        refine.extend(erases + paints)

    return {"steps": [
        {"kind": "strokes", "strokes": [s.to_json() for s in strokes]},
        {"kind": "interp", "axis": "transverse", "keys": key_set},
        {"kind": "strokes", "strokes": [s.to_json() for s in refine]},
    ]}


def run_workflow(mask: LabelVolume, v: Volume, workflow: dict) -> LabelVolume:
    """Apply a scripted workflow's steps to a mask, in order."""
    for step in workflow["steps"]:
        if step["kind"] == "strokes":
            for obj in step["strokes"]:
                apply_stroke(mask, v, BrushStroke.from_json(obj))
        elif step["kind"] == "interp":
            interpolate_slices(mask, Axis.parse(step["axis"]), step["keys"], v.spacing)
        else:
            raise ValueError(f"unknown workflow step kind {step['kind']!r}")
    return mask
