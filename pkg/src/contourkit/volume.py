"""Voxel data model: normalized density grids, windowing, slicing and sampling.

Conventions used throughout the toolkit:

* density arrays have shape ``(nx, ny, nz)`` and are indexed ``[x, y, z]``;
* voxel centers sit at integer lattice coordinates, so world position of
  voxel ``(i, j, k)`` is ``(i*sx, j*sy, k*sz)`` millimeters;
* the volume occupies the voxel-center hull ``[0, (n-1)*s]`` per axis in
  world space; samples outside that hull read as density 0 (empty space);
* on disk the raw grid is little-endian, x-fastest, then y, then z.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import ConstantVolume, CorruptFile, DimensionMismatch, IndexOutOfRange

VOLUME_FORMAT_VERSION = 1


class Axis(Enum):
    """The three anatomical slicing orientations, each pinned to a volume axis."""

    TRANSVERSE = "transverse"  # fixed z
    SAGITTAL = "sagittal"      # fixed x
    CORONAL = "coronal"        # fixed y

    @property
    def volume_axis(self) -> int:
        return _AXIS_INDEX[self]

    @property
    def plane_axes(self) -> tuple[int, int]:
        """The two in-plane volume axes, in ascending order."""
        return _PLANE_AXES[self]

    @classmethod
    def parse(cls, s: str) -> "Axis":
        key = s.strip().lower()
        aliases = {"z": cls.TRANSVERSE, "x": cls.SAGITTAL, "y": cls.CORONAL}
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown axis {s!r} (expected transverse/sagittal/coronal or z/x/y)")


_AXIS_INDEX = {Axis.TRANSVERSE: 2, Axis.SAGITTAL: 0, Axis.CORONAL: 1}
_PLANE_AXES = {Axis.TRANSVERSE: (0, 1), Axis.SAGITTAL: (1, 2), Axis.CORONAL: (0, 2)}


@dataclass(frozen=True)
class DensityWindow:
    """View-time remap of normalized density: [lo, hi] stretches to [0, 1]."""

    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.lo < self.hi <= 1.0):
            raise ValueError(f"invalid density window [{self.lo}, {self.hi}]")

    @property
    def is_full(self) -> bool:
        return self.lo == 0.0 and self.hi == 1.0


FULL_WINDOW = DensityWindow(0.0, 1.0)


@dataclass(frozen=True)
class Volume:
    """Immutable normalized density grid with physical voxel spacing."""

    dims: tuple[int, int, int]
    spacing: tuple[float, float, float]
    densities: np.ndarray          # float32, shape dims, values in [0, 1]
    raw_range: tuple[float, float]

    def __post_init__(self):
        if any(n < 1 for n in self.dims):
            raise ValueError(f"all dims must be >= 1, got {self.dims}")
        if any(s <= 0 for s in self.spacing):
            raise ValueError(f"all spacing must be > 0, got {self.spacing}")
        if tuple(self.densities.shape) != tuple(self.dims):
            raise DimensionMismatch(
                f"density grid shape {self.densities.shape} != dims {self.dims}")
        self.densities.setflags(write=False)

    @property
    def world_extent(self) -> tuple[float, float, float]:
        """Upper corner of the voxel-center hull, in mm."""
        return tuple((n - 1) * s for n, s in zip(self.dims, self.spacing))


@dataclass(frozen=True)
class Slice2D:
    """One axis-aligned plane of voxel densities."""

    axis: Axis
    index: int
    grid: np.ndarray               # shape = the two non-axis dims, ascending order
    spacing: tuple[float, float]   # mm per in-plane axis


def normalize_minmax(
    raw: np.ndarray,
    dims: tuple[int, int, int] | None = None,
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0),
) -> Volume:
    """Scale a raw 3D grid to [0, 1] by min-max normalization.

    The original resolution is preserved; raises ConstantVolume when the grid
    holds a single distinct value.
    """
    raw = np.asarray(raw)
    if raw.ndim != 3:
        raise DimensionMismatch(f"expected a 3D grid, got shape {raw.shape}")
    if dims is not None and tuple(raw.shape) != tuple(dims):
        raise DimensionMismatch(f"grid shape {raw.shape} != declared dims {tuple(dims)}")
    lo = float(raw.min())
    hi = float(raw.max())
    if hi == lo:
        raise ConstantVolume(f"all raw values equal {lo}; normalization undefined")
    dens = ((raw.astype(np.float64) - lo) / (hi - lo)).astype(np.float32)
    return Volume(tuple(raw.shape), tuple(float(s) for s in spacing), dens, (lo, hi))


def apply_window(d, w: DensityWindow):
    """Remap density through a window: clamp((d - lo) / (hi - lo), 0, 1).

    Accepts scalars or arrays; never mutates stored densities.
    """
    out = np.clip((d - w.lo) / (w.hi - w.lo), 0.0, 1.0)
    if np.isscalar(d) or np.ndim(d) == 0:
        return float(out)
    return out


def extract_slice(v: Volume, axis: Axis, index: int) -> Slice2D:
    """Copy the fixed-index plane of voxel densities; no interpolation."""
    ax = axis.volume_axis
    if not (0 <= index < v.dims[ax]):
        raise IndexOutOfRange(f"{axis.value} index {index} outside [0, {v.dims[ax]})")
    grid = np.take(v.densities, index, axis=ax).copy()
    a1, a2 = axis.plane_axes
    return Slice2D(axis, index, grid, (v.spacing[a1], v.spacing[a2]))


def world_to_voxel(v: Volume, p) -> np.ndarray:
    """World mm -> fractional voxel coordinates (voxel centers at integers)."""
    return np.asarray(p, dtype=np.float64) / np.asarray(v.spacing, dtype=np.float64)


def voxel_to_world(v: Volume, c) -> np.ndarray:
    """Inverse of world_to_voxel; exact for integer coordinates."""
    return np.asarray(c, dtype=np.float64) * np.asarray(v.spacing, dtype=np.float64)


def sample_trilinear(v: Volume, p, w: DensityWindow = FULL_WINDOW) -> float:
    """Windowed trilinear sample at fractional voxel coordinates.

    Coordinates outside [0, dims-1] on any axis are empty space and return 0.
    """
    pts = np.asarray(p, dtype=np.float64).reshape(1, 3)
    raw = trilinear_many(v.densities, v.dims, pts)
    val = float(raw[0])
    if _outside(pts, v.dims)[0]:
        return 0.0
    return float(apply_window(val, w))


def _outside(pts: np.ndarray, dims) -> np.ndarray:
    n = np.asarray(dims, dtype=np.float64)
    return ((pts < 0.0) | (pts > n - 1.0)).any(axis=1)


def trilinear_clamped(densities: np.ndarray, dims, pts: np.ndarray) -> np.ndarray:
    """Trilinear interpolation with coordinates assumed inside [0, dims-1].

    The inner loop of the ray caster: indices are clamped, fractions taken
    against the clamped cell, interpolation runs in float32 (the storage
    dtype) with deterministic, chunking-independent operation order.
    """
    nx, ny, nz = (int(n) for n in dims)
    syx = ny * nz
    x = pts[:, 0]
    y = pts[:, 1]
    z = pts[:, 2]
    ix = np.clip(np.floor(x), 0, max(nx - 2, 0)).astype(np.int32)
    iy = np.clip(np.floor(y), 0, max(ny - 2, 0)).astype(np.int32)
    iz = np.clip(np.floor(z), 0, max(nz - 2, 0)).astype(np.int32)
    fx = (x - ix).astype(np.float32)
    fy = (y - iy).astype(np.float32)
    fz = (z - iz).astype(np.float32)
    ox = np.int32(syx if nx > 1 else 0)
    oy = np.int32(nz if ny > 1 else 0)
    oz = np.int32(1 if nz > 1 else 0)
    base = ix * np.int32(syx) + iy * np.int32(nz) + iz
    flat = densities.reshape(-1)
    c000 = flat[base]
    c001 = flat[base + oz]
    c010 = flat[base + oy]
    c011 = flat[base + oy + oz]
    c100 = flat[base + ox]
    c101 = flat[base + ox + oz]
    c110 = flat[base + ox + oy]
    c111 = flat[base + ox + oy + oz]
    one = np.float32(1.0)
    gz = one - fz
    gy = one - fy
    low = (c000 * gz + c001 * fz) * gy + (c010 * gz + c011 * fz) * fy
    high = (c100 * gz + c101 * fz) * gy + (c110 * gz + c111 * fz) * fy
    return low * (one - fx) + high * fx


def trilinear_many(densities: np.ndarray, dims, pts: np.ndarray) -> np.ndarray:
    """Trilinear interpolation for an (N, 3) batch of fractional voxel coords.

    Points outside [0, dims-1] on any axis return 0 (empty space).
    """
    pts = np.asarray(pts, dtype=np.float64)
    bounded = np.clip(pts, -2.0, np.asarray(dims, dtype=np.float64) + 1.0)
    out = trilinear_clamped(densities, dims, bounded).astype(np.float64)
    out[_outside(pts, dims)] = 0.0
    return out


def sample_trilinear_many(v: Volume, pts: np.ndarray, w: DensityWindow = FULL_WINDOW) -> np.ndarray:
    """Batched windowed trilinear sampling; out-of-grid points stay 0."""
    raw = trilinear_many(v.densities, v.dims, pts)
    if w.is_full:
        return raw
    vals = np.clip((raw - w.lo) / (w.hi - w.lo), 0.0, 1.0)
    vals[_outside(np.asarray(pts, dtype=np.float64), v.dims)] = 0.0
    return vals


# ---------------------------------------------------------------------------
# Volume file pair: <name>.json metadata + <name>.raw little-endian payload.
# dtype "f32" stores the normalized densities themselves; dtype "u16" stores
# the original integer raw values, renormalized through raw_range on load.
# ---------------------------------------------------------------------------

def save_volume(v: Volume, path: str | Path, dtype: str = "f32") -> tuple[Path, Path]:
    """Write the `<name>.json` + `<name>.raw` pair; returns both paths."""
    base = _strip_volume_suffix(Path(path))
    json_path = base.with_suffix(".json")
    raw_path = base.with_suffix(".raw")
    lo, hi = v.raw_range
    if dtype == "f32":
        payload = v.densities.astype("<f4").ravel(order="F").tobytes()
    elif dtype == "u16":
        codes = np.rint(v.densities.astype(np.float64) * (hi - lo) + lo)
        payload = codes.astype("<u2").ravel(order="F").tobytes()
    else:
        raise ValueError(f"unsupported dtype {dtype!r}")
    meta = {
        "version": VOLUME_FORMAT_VERSION,
        "dims": list(v.dims),
        "spacing_mm": list(v.spacing),
        "dtype": dtype,
        "raw_range": [lo, hi],
    }
    json_path.write_text(json.dumps(meta, indent=2) + "\n")
    raw_path.write_bytes(payload)
    return json_path, raw_path


def load_volume(path: str | Path) -> Volume:
    """Load a `<name>.json` + `<name>.raw` pair written by save_volume."""
    base = _strip_volume_suffix(Path(path))
    json_path = base.with_suffix(".json")
    raw_path = base.with_suffix(".raw")
    try:
        meta = json.loads(json_path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise CorruptFile(f"cannot read volume metadata {json_path}: {e}", field="json")
    for key in ("dims", "spacing_mm", "dtype", "raw_range"):
        if key not in meta:
            raise CorruptFile(f"volume metadata missing {key!r}", field=key)
    dims = tuple(int(n) for n in meta["dims"])
    spacing = tuple(float(s) for s in meta["spacing_mm"])
    dtype = meta["dtype"]
    lo, hi = (float(x) for x in meta["raw_range"])
    count = dims[0] * dims[1] * dims[2]
    try:
        blob = raw_path.read_bytes()
    except OSError as e:
        raise CorruptFile(f"cannot read voxel payload {raw_path}: {e}", field="raw")
    if dtype == "f32":
        expected = count * 4
        if len(blob) != expected:
            raise CorruptFile(
                f"voxel payload is {len(blob)} bytes, expected {expected}", field="raw")
        dens = np.frombuffer(blob, dtype="<f4").reshape(dims, order="F").astype(np.float32)
    elif dtype == "u16":
        expected = count * 2
        if len(blob) != expected:
            raise CorruptFile(
                f"voxel payload is {len(blob)} bytes, expected {expected}", field="raw")
        codes = np.frombuffer(blob, dtype="<u2").reshape(dims, order="F")
        if hi == lo:
            raise CorruptFile("raw_range has zero width", field="raw_range")
        dens = ((codes.astype(np.float64) - lo) / (hi - lo)).astype(np.float32)
    else:
        raise CorruptFile(f"unsupported dtype {dtype!r}", field="dtype")
    if dens.min() < 0.0 or dens.max() > 1.0:
        raise CorruptFile("densities fall outside [0, 1] after normalization", field="raw")
    return Volume(dims, spacing, dens, (lo, hi))


def _strip_volume_suffix(p: Path) -> Path:
    if p.suffix in (".json", ".raw"):
        return p.with_suffix("")
    return p
