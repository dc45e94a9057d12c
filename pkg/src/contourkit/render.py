"""Direct volume rendering: orthographic ray casting with front-to-back
over-operator compositing at a fixed number of equal-distance samples.

Rays are clipped against the volume's voxel-center hull and sampled at the
midpoints of ``steps`` equal sub-segments. Classification is transfer
function after density windowing after trilinear interpolation. Compositing
accumulates ``C += (1 - A) * alpha_i * c_i`` and ``A += (1 - A) * alpha_i``.

Rendering is embarrassingly parallel over pixels: the image is split into
row bands, each band is cast by one worker against the shared read-only
volume, and every pixel has exactly one writer, so output is bit-identical
for any thread count.
"""

from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .errors import DimensionMismatch
from .transfer import RGBA, TRANSPARENT, TransferFunction, tf_eval_many
from .volume import DensityWindow, FULL_WINDOW, Volume, trilinear_clamped

DEFAULT_STEPS = 256
# Tail contribution after stopping at accumulated alpha >= this bound stays
# below half of one 8-bit quantization step per channel.
DEFAULT_EARLY_STOP = 0.999


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    n = float(np.linalg.norm(v))
    if n == 0.0:
        raise ValueError("zero-length vector")
    return v / n


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    dir: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=np.float64))
        d = np.asarray(self.dir, dtype=np.float64)
        if abs(np.linalg.norm(d) - 1.0) > 1e-6:
            raise ValueError(f"ray direction must be unit length, got |d|={np.linalg.norm(d)}")
        object.__setattr__(self, "dir", d)


@dataclass(frozen=True)
class Camera:
    """Orthographic camera: an image plane of ``world_width`` mm swept along view_dir."""

    position: np.ndarray
    view_dir: np.ndarray
    up: np.ndarray
    image_size: tuple[int, int]    # (width, height) pixels
    world_width: float             # mm extent of the image plane horizontally
    right: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.image_size[0] < 1 or self.image_size[1] < 1:
            raise ValueError(f"image size must be >= 1x1, got {self.image_size}")
        if self.world_width <= 0:
            raise ValueError("world_width must be positive")
        pos = np.asarray(self.position, dtype=np.float64)
        view = _unit(self.view_dir)
        right = _unit(np.cross(view, np.asarray(self.up, dtype=np.float64)))
        up = np.cross(right, view)
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "view_dir", view)
        object.__setattr__(self, "up", up)
        object.__setattr__(self, "right", right)

    @classmethod
    def from_look_at(cls, position, look_at, up, image_size, world_width) -> "Camera":
        view = _unit(np.asarray(look_at, dtype=np.float64) - np.asarray(position, dtype=np.float64))
        return cls(position, view, up, tuple(image_size), float(world_width))

    @property
    def world_height(self) -> float:
        w, h = self.image_size
        return self.world_width * h / w

    def pixel_rays(self, rows: slice | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Ray origins and shared direction for pixel centers, row-major."""
        w, h = self.image_size
        r0, r1 = (0, h) if rows is None else (rows.start, rows.stop)
        us = (np.arange(w, dtype=np.float64) + 0.5) / w - 0.5
        vs = 0.5 - (np.arange(r0, r1, dtype=np.float64) + 0.5) / h
        uu, vv = np.meshgrid(us * self.world_width, vs * self.world_height)
        origins = (self.position[None, :]
                   + uu.reshape(-1, 1) * self.right[None, :]
                   + vv.reshape(-1, 1) * self.up[None, :])
        dirs = np.broadcast_to(self.view_dir, origins.shape)
        return origins, dirs


def composite_front_to_back(samples) -> RGBA:
    """Fold an ordered nearest-to-farthest RGBA list with the over operator."""
    c = np.zeros(3, dtype=np.float64)
    a = 0.0
    for s in samples:
        w = (1.0 - a) * s[3]
        c = c + w * np.asarray(s[:3], dtype=np.float64)
        a = a + w
    return RGBA(float(c[0]), float(c[1]), float(c[2]), float(a))


def intersect_aabb(origins: np.ndarray, dirs: np.ndarray, hi: np.ndarray
                   ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Slab clip of rays against [0, hi]; returns (t_enter, t_exit, hit).

    Entry parameters are clamped to >= 0 so rays never sample behind their
    origin.
    """
    d = np.where(np.abs(dirs) < 1e-300, 1e-300, dirs)
    ta = (0.0 - origins) / d
    tb = (hi[None, :] - origins) / d
    t0 = np.maximum(np.minimum(ta, tb).max(axis=1), 0.0)
    t1 = np.maximum(ta, tb).min(axis=1)
    return t0, t1, t1 >= t0


def cast_ray(
    v: Volume,
    tf: TransferFunction,
    w: DensityWindow,
    r: Ray,
    steps: int = DEFAULT_STEPS,
    early_stop: float | None = DEFAULT_EARLY_STOP,
) -> RGBA:
    """Cast one ray through the volume; misses return fully transparent."""
    out = _cast_batch(v, None, tf, w, r.origin.reshape(1, 3), r.dir.reshape(1, 3),
                      steps=steps, early_stop=early_stop, tint=None)[0]
    return RGBA(float(out[0]), float(out[1]), float(out[2]), float(out[3]))


def _cast_batch(
    v: Volume,
    label_bits: np.ndarray | None,
    tf: TransferFunction,
    w: DensityWindow,
    origins: np.ndarray,
    dirs: np.ndarray,
    steps: int,
    early_stop: float | None,
    tint: RGBA | None,
) -> np.ndarray:
    """Vectorized ray caster; returns (N, 4) float64 RGBA."""
    n_rays = len(origins)
    out = np.zeros((n_rays, 4), dtype=np.float64)
    spacing = np.asarray(v.spacing, dtype=np.float64)
    hi = (np.asarray(v.dims, dtype=np.float64) - 1.0) * spacing
    t0, t1, hit = intersect_aabb(np.asarray(origins, np.float64),
                                 np.asarray(dirs, np.float64), hi)
    if not hit.any():
        return out

    idx = np.flatnonzero(hit)            # output row per live ray
    # positions in voxel coordinates: pos = O/spacing + t * D/spacing
    O = np.asarray(origins, np.float64)[idx] / spacing[None, :]
    D = np.asarray(dirs, np.float64)[idx] / spacing[None, :]
    tstart = t0[idx]
    tstep = (t1[idx] - t0[idx]) / steps
    color = np.zeros((len(idx), 3), dtype=np.float64)
    alpha = np.zeros(len(idx), dtype=np.float64)

    dims_arr = np.asarray(v.dims, dtype=np.int64)
    for k in range(steps):
        t = tstart + (k + 0.5) * tstep
        pos = O + t[:, None] * D
        dens = trilinear_clamped(v.densities, v.dims, pos).astype(np.float64)
        if not w.is_full:
            dens = np.clip((dens - w.lo) / (w.hi - w.lo), 0.0, 1.0)
        rgba = tf_eval_many(tf, dens)
        if label_bits is not None and tint is not None and tint.a > 0.0:
            nearest = np.clip(np.rint(pos).astype(np.int64), 0, dims_arr - 1)
            labeled = label_bits[nearest[:, 0], nearest[:, 1], nearest[:, 2]]
            if labeled.any():
                mix = tint.a * labeled.astype(np.float64)
                rgba[:, 0] = rgba[:, 0] * (1.0 - mix) + tint.r * mix
                rgba[:, 1] = rgba[:, 1] * (1.0 - mix) + tint.g * mix
                rgba[:, 2] = rgba[:, 2] * (1.0 - mix) + tint.b * mix
        weight = (1.0 - alpha) * rgba[:, 3]
        if early_stop is not None:
            weight = np.where(alpha >= early_stop, 0.0, weight)
        color += weight[:, None] * rgba[:, :3]
        alpha += weight

        # Periodically drop saturated rays; freezing happened above, so this
        # is a pure optimization and cannot change any ray's value.
        if early_stop is not None and (k & 31) == 31 and k + 1 < steps:
            live = alpha < early_stop
            if not live.all():
                out[idx[~live], :3] = color[~live]
                out[idx[~live], 3] = alpha[~live]
                if not live.any():
                    return out
                idx = idx[live]
                O, D = O[live], D[live]
                tstart, tstep = tstart[live], tstep[live]
                color, alpha = color[live], alpha[live]

    out[idx, :3] = color
    out[idx, 3] = alpha
    return out


def _rays_to_volume_frame(origins: np.ndarray, dirs: np.ndarray, pose) -> tuple[np.ndarray, np.ndarray]:
    """Map world-space rays into the frame of a posed volume."""
    from .geom import quat_conjugate, quat_rotate_many

    qinv = quat_conjugate(pose.rotation)
    o = quat_rotate_many(qinv, origins - np.asarray(pose.translation, np.float64)) / pose.scale
    d = quat_rotate_many(qinv, dirs)
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return o, d


def render_image(
    v: Volume,
    labels=None,
    tf: TransferFunction | None = None,
    w: DensityWindow = FULL_WINDOW,
    cam: Camera | None = None,
    label_tint: RGBA = RGBA(1.0, 0.2, 0.1, 0.6),
    pose=None,
    steps: int = DEFAULT_STEPS,
    early_stop: float | None = DEFAULT_EARLY_STOP,
    threads: int = 1,
) -> np.ndarray:
    """Render an (h, w, 4) float64 RGBA image, one cast ray per pixel.

    ``labels``, when given, must match the volume dims; labeled samples blend
    their classified color toward ``label_tint`` before compositing so painted
    regions read as a colored volume.
    """
    if tf is None or cam is None:
        raise ValueError("render_image requires a transfer function and camera")
    bits = None
    if labels is not None:
        if tuple(labels.dims) != tuple(v.dims):
            raise DimensionMismatch(
                f"label dims {labels.dims} != volume dims {v.dims}")
        bits = labels.bits
    width, height = cam.image_size

    def render_rows(r0: int, r1: int) -> np.ndarray:
        origins, dirs = cam.pixel_rays(slice(r0, r1))
        if pose is not None:
            origins, dirs = _rays_to_volume_frame(origins, np.array(dirs), pose)
        return _cast_batch(v, bits, tf, w, origins, dirs, steps, early_stop,
                           label_tint).reshape(r1 - r0, width, 4)

    band = max(1, min(height, int(np.ceil(65536 / max(width, 1)))))
    bounds = [(r, min(r + band, height)) for r in range(0, height, band)]
    if threads <= 1 or len(bounds) == 1:
        parts = [render_rows(r0, r1) for r0, r1 in bounds]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda b: render_rows(*b), bounds))
    return np.concatenate(parts, axis=0)


def image_to_png_bytes(img: np.ndarray) -> bytes:
    """Quantize a float RGBA image to 8-bit and encode as PNG."""
    q = np.clip(np.rint(np.asarray(img, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(q, mode="RGBA").save(buf, format="PNG")
    return buf.getvalue()


def save_png(img: np.ndarray, path) -> None:
    with open(path, "wb") as f:
        f.write(image_to_png_bytes(img))
