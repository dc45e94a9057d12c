"""Contour authoring on a shared binary label volume.

The 2D disc brush and the 3D sphere brush mutate the same voxel mask, which
is what keeps slice contours and the colored 3D volume consistent by
construction: a voxel belongs to the contour iff its center lies inside some
stamped footprint, measured in millimeters with anisotropic spacing honored.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import CorruptFile, DimensionMismatch, IndexOutOfRange
from .volume import Axis, Volume

MASK_FORMAT_VERSION = 1


class BrushMode(Enum):
    PAINT = "paint"
    ERASE = "erase"


class BrushTool(Enum):
    DISC2D = "disc2d"
    SPHERE3D = "sphere3d"


@dataclass
class LabelVolume:
    """Per-voxel binary contour mask aligned 1:1 with a companion Volume."""

    dims: tuple[int, int, int]
    bits: np.ndarray = field(default=None)  # bool, shape dims

    def __post_init__(self):
        if self.bits is None:
            self.bits = np.zeros(self.dims, dtype=bool)
        else:
            self.bits = np.asarray(self.bits, dtype=bool)
        if tuple(self.bits.shape) != tuple(self.dims):
            raise DimensionMismatch(
                f"mask shape {self.bits.shape} != dims {self.dims}")

    @classmethod
    def empty_like(cls, v: Volume) -> "LabelVolume":
        return cls(v.dims)

    def copy(self) -> "LabelVolume":
        return LabelVolume(self.dims, self.bits.copy())

    def count(self) -> int:
        return int(self.bits.sum())

    # -- RLE serialization: run lengths over the x-fastest flattening,
    #    alternating 0-run / 1-run and always starting with a 0-run.

    def to_rle(self) -> list[int]:
        flat = self.bits.ravel(order="F")
        if flat.size == 0:
            return []
        changes = np.flatnonzero(flat[1:] != flat[:-1]) + 1
        bounds = np.concatenate([[0], changes, [flat.size]])
        runs = np.diff(bounds).tolist()
        if flat[0]:
            runs = [0] + runs
        return [int(r) for r in runs]

    @classmethod
    def from_rle(cls, dims, runs) -> "LabelVolume":
        total = int(np.prod(dims))
        if sum(runs) != total:
            raise CorruptFile(
                f"RLE runs sum to {sum(runs)}, mask has {total} voxels", field="rle")
        if any(r < 0 for r in runs):
            raise CorruptFile("negative RLE run length", field="rle")
        flat = np.zeros(total, dtype=bool)
        pos = 0
        value = False
        for r in runs:
            if value:
                flat[pos:pos + r] = True
            pos += r
            value = not value
        return cls(tuple(int(n) for n in dims), flat.reshape(dims, order="F"))

    def to_json(self) -> dict:
        return {"version": MASK_FORMAT_VERSION, "dims": list(self.dims), "rle": self.to_rle()}

    @classmethod
    def from_json(cls, obj: dict) -> "LabelVolume":
        for key in ("dims", "rle"):
            if key not in obj:
                raise CorruptFile(f"mask file missing {key!r}", field=key)
        return cls.from_rle(tuple(int(n) for n in obj["dims"]), obj["rle"])


def save_mask(m: LabelVolume, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(m.to_json()) + "\n")
    return path


def load_mask(path: str | Path) -> LabelVolume:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise CorruptFile(f"cannot read mask {path}: {e}", field="json")
    return LabelVolume.from_json(obj)


@dataclass(frozen=True)
class BrushStroke:
    """One committed brush gesture: stamp centers along a path, in mm.

    Disc strokes carry the axis and slice index they were drawn on; every
    stamp of a disc stroke lands on that one slice.
    """

    tool: BrushTool
    mode: BrushMode
    radius_mm: float
    path: tuple[tuple[float, ...], ...]
    timestamp_ms: float = 0.0
    axis: Axis | None = None
    slice_index: int | None = None

    def __post_init__(self):
        if self.radius_mm <= 0:
            raise ValueError("radius_mm must be positive")
        if not self.path:
            raise ValueError("stroke path must be nonempty")
        want = 2 if self.tool is BrushTool.DISC2D else 3
        if any(len(p) != want for p in self.path):
            raise ValueError(f"{self.tool.value} stamps need {want} coordinates")
        if self.tool is BrushTool.DISC2D and (self.axis is None or self.slice_index is None):
            raise ValueError("disc strokes need axis and slice_index")

    def to_json(self) -> dict:
        obj = {
            "tool": self.tool.value,
            "mode": self.mode.value,
            "radius_mm": self.radius_mm,
            "path": [list(p) for p in self.path],
            "t": self.timestamp_ms,
        }
        if self.tool is BrushTool.DISC2D:
            obj["axis"] = self.axis.value
            obj["slice"] = self.slice_index
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "BrushStroke":
        tool = BrushTool(obj["tool"])
        axis = Axis.parse(obj["axis"]) if "axis" in obj and obj["axis"] is not None else None
        return cls(
            tool=tool,
            mode=BrushMode(obj["mode"]),
            radius_mm=float(obj["radius_mm"]),
            path=tuple(tuple(float(x) for x in p) for p in obj["path"]),
            timestamp_ms=float(obj.get("t", 0.0)),
            axis=axis,
            slice_index=int(obj["slice"]) if obj.get("slice") is not None else None,
        )


def _slice_view(bits: np.ndarray, axis: Axis, index: int) -> np.ndarray:
    ax = axis.volume_axis
    if not (0 <= index < bits.shape[ax]):
        raise IndexOutOfRange(
            f"{axis.value} index {index} outside [0, {bits.shape[ax]})")
    sl = [slice(None)] * 3
    sl[ax] = index
    return bits[tuple(sl)]


def paint_disc(
    m: LabelVolume,
    v: Volume,
    axis: Axis,
    index: int,
    center_mm,
    radius_mm: float,
    mode: BrushMode = BrushMode.PAINT,
) -> LabelVolume:
    """Stamp one disc: set/clear every in-plane voxel center within radius_mm."""
    if radius_mm <= 0:
        raise ValueError("radius_mm must be positive")
    if tuple(m.dims) != tuple(v.dims):
        raise DimensionMismatch(f"mask dims {m.dims} != volume dims {v.dims}")
    plane = _slice_view(m.bits, axis, index)
    a1, a2 = axis.plane_axes
    s1, s2 = v.spacing[a1], v.spacing[a2]
    cu, cv = float(center_mm[0]), float(center_mm[1])

    u0 = max(0, math.ceil((cu - radius_mm) / s1))
    u1 = min(v.dims[a1] - 1, math.floor((cu + radius_mm) / s1))
    v0 = max(0, math.ceil((cv - radius_mm) / s2))
    v1 = min(v.dims[a2] - 1, math.floor((cv + radius_mm) / s2))
    if u0 > u1 or v0 > v1:
        return m
    uu = np.arange(u0, u1 + 1, dtype=np.float64) * s1 - cu
    vv = np.arange(v0, v1 + 1, dtype=np.float64) * s2 - cv
    inside = (uu[:, None] ** 2 + vv[None, :] ** 2) <= radius_mm ** 2
    window = plane[u0:u1 + 1, v0:v1 + 1]
    if mode is BrushMode.PAINT:
        window |= inside
    else:
        window &= ~inside
    return m


def paint_sphere(
    m: LabelVolume,
    v: Volume,
    center_mm,
    radius_mm: float,
    mode: BrushMode = BrushMode.PAINT,
) -> LabelVolume:
    """Stamp one sphere: set/clear every voxel center within radius_mm (Euclidean mm)."""
    if radius_mm <= 0:
        raise ValueError("radius_mm must be positive")
    if tuple(m.dims) != tuple(v.dims):
        raise DimensionMismatch(f"mask dims {m.dims} != volume dims {v.dims}")
    c = np.asarray(center_mm, dtype=np.float64)
    s = np.asarray(v.spacing, dtype=np.float64)
    lo = [max(0, math.ceil((c[i] - radius_mm) / s[i])) for i in range(3)]
    hi = [min(v.dims[i] - 1, math.floor((c[i] + radius_mm) / s[i])) for i in range(3)]
    if any(lo[i] > hi[i] for i in range(3)):
        return m
    dx = np.arange(lo[0], hi[0] + 1, dtype=np.float64) * s[0] - c[0]
    dy = np.arange(lo[1], hi[1] + 1, dtype=np.float64) * s[1] - c[1]
    dz = np.arange(lo[2], hi[2] + 1, dtype=np.float64) * s[2] - c[2]
    inside = (dx[:, None, None] ** 2 + dy[None, :, None] ** 2 + dz[None, None, :] ** 2) \
        <= radius_mm ** 2
    window = m.bits[lo[0]:hi[0] + 1, lo[1]:hi[1] + 1, lo[2]:hi[2] + 1]
    if mode is BrushMode.PAINT:
        window |= inside
    else:
        window &= ~inside
    return m


def stamp_chain(path, radius_mm: float) -> list[tuple[float, ...]]:
    """Densify a stamp path so consecutive stamps are at most radius/2 apart."""
    pts = [tuple(float(x) for x in p) for p in path]
    out = [pts[0]]
    for prev, nxt in zip(pts, pts[1:]):
        a = np.asarray(prev, dtype=np.float64)
        b = np.asarray(nxt, dtype=np.float64)
        dist = float(np.linalg.norm(b - a))
        n = max(1, math.ceil(dist / (radius_mm / 2.0)))
        for i in range(1, n + 1):
            p = tuple((a + (b - a) * (i / n)).tolist())
            if p != out[-1]:
                out.append(p)
    return out


def apply_stroke(m: LabelVolume, v: Volume, s: BrushStroke) -> LabelVolume:
    """Stamp a whole stroke: the union (paint) or difference (erase) of all
    footprints along the densified path."""
    chain = stamp_chain(s.path, s.radius_mm)
    if s.tool is BrushTool.DISC2D:
        for p in chain:
            paint_disc(m, v, s.axis, s.slice_index, p, s.radius_mm, s.mode)
    else:
        for p in chain:
            paint_sphere(m, v, p, s.radius_mm, s.mode)
    return m


def mask_slice(m: LabelVolume, axis: Axis, index: int) -> np.ndarray:
    """Copy of the mask's fixed-index plane; the 3D -> 2D reflection path."""
    return _slice_view(m.bits, axis, index).copy()
