"""Closed-polygon boundaries of binary masks via marching squares.

Polygons trace the 0.5 iso-level between set and unset voxel centers, so
every vertex is an edge midpoint of the voxel-center lattice. Segments are
directed with the set region on the left, which makes outer boundaries
counter-clockwise and holes clockwise without a separate orientation pass.
Ambiguous saddle cells are resolved as separated corners.
"""

from __future__ import annotations

import numpy as np

from .annotate import LabelVolume, mask_slice
from .volume import Axis

# Directed segments per marching-squares case, endpoints in half-step units:
# for cell (i, j): B=(2i+1, 2j)  R=(2i+2, 2j+1)  T=(2i+1, 2j+2)  L=(2i, 2j+1).
_B, _R, _T, _L = (1, 0), (2, 1), (1, 2), (0, 1)
_CASE_SEGMENTS: dict[int, list[tuple[tuple[int, int], tuple[int, int]]]] = {
    0: [],
    1: [(_B, _L)],
    2: [(_R, _B)],
    3: [(_R, _L)],
    4: [(_T, _R)],
    5: [(_B, _L), (_T, _R)],
    6: [(_T, _B)],
    7: [(_T, _L)],
    8: [(_L, _T)],
    9: [(_B, _T)],
    10: [(_R, _B), (_L, _T)],
    11: [(_R, _T)],
    12: [(_L, _R)],
    13: [(_B, _R)],
    14: [(_L, _B)],
    15: [],
}


def extract_contours(mask: np.ndarray, spacing=(1.0, 1.0)) -> list[np.ndarray]:
    """Boundary polygons of a 2D binary mask, closed, in slice mm coordinates."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return []
    padded = np.zeros((mask.shape[0] + 2, mask.shape[1] + 2), dtype=np.int8)
    padded[1:-1, 1:-1] = mask

    cases = (padded[:-1, :-1]
             | padded[1:, :-1] << 1
             | padded[1:, 1:] << 2
             | padded[:-1, 1:] << 3)

    # start vertex key -> end vertex key, in half-step padded coordinates
    next_vertex: dict[tuple[int, int], tuple[int, int]] = {}
    for i, j in zip(*np.nonzero((cases != 0) & (cases != 15))):
        for (su, sv), (eu, ev) in _CASE_SEGMENTS[int(cases[i, j])]:
            start = (2 * int(i) + su, 2 * int(j) + sv)
            end = (2 * int(i) + eu, 2 * int(j) + ev)
            next_vertex[start] = end

    su, sv = float(spacing[0]), float(spacing[1])
    polygons = []
    while next_vertex:
        start = next(iter(next_vertex))
        loop = [start]
        cur = start
        while True:
            cur = next_vertex.pop(cur)
            loop.append(cur)
            if cur == start:
                break
        # half-step padded coords -> voxel coords -> mm
        pts = (np.asarray(loop, dtype=np.float64) / 2.0) - 1.0
        pts[:, 0] *= su
        pts[:, 1] *= sv
        polygons.append(pts)
    return polygons


def polygon_area(poly: np.ndarray) -> float:
    """Signed area (shoelace); positive for counter-clockwise loops."""
    x, y = poly[:-1, 0], poly[:-1, 1]
    xn, yn = poly[1:, 0], poly[1:, 1]
    return float(0.5 * np.sum(x * yn - xn * y))


def rasterize_polygons(polygons, shape, spacing=(1.0, 1.0)) -> np.ndarray:
    """Even-odd fill of closed polygons back onto the voxel-center grid.

    Inverse of extract_contours at the 0.5 level: voxel centers are never on
    a boundary segment, so parity is unambiguous.
    """
    nu, nv = int(shape[0]), int(shape[1])
    if not polygons:
        return np.zeros((nu, nv), dtype=bool)
    px = np.broadcast_to(np.arange(nu, dtype=np.float64)[:, None], (nu, nv))
    py = np.broadcast_to(np.arange(nv, dtype=np.float64)[None, :], (nu, nv))
    crossings = np.zeros((nu, nv), dtype=np.int64)
    su, sv = float(spacing[0]), float(spacing[1])
    for poly in polygons:
        p = np.asarray(poly, dtype=np.float64).copy()
        p[:, 0] /= su
        p[:, 1] /= sv
        x1, y1 = p[:-1, 0], p[:-1, 1]
        x2, y2 = p[1:, 0], p[1:, 1]
        for e in range(len(x1)):
            a, b = y1[e], y2[e]
            if a == b:
                continue
            straddles = ((a <= py) & (py < b)) | ((b <= py) & (py < a))
            if not straddles.any():
                continue
            xi = x1[e] + (py - a) * (x2[e] - x1[e]) / (b - a)
            crossings += (straddles & (xi > px)).astype(np.int64)
    return (crossings % 2) == 1


def contour_set(m: LabelVolume, axis: Axis, spacing) -> dict:
    """Per-slice contour polygons for one axis, as a JSON-ready mapping."""
    a1, a2 = axis.plane_axes
    sp = (spacing[a1], spacing[a2])
    n = m.dims[axis.volume_axis]
    slices = []
    for k in range(n):
        plane = mask_slice(m, axis, k)
        if not plane.any():
            continue
        polys = extract_contours(plane, sp)
        slices.append({
            "slice": k,
            "polygons": [p.tolist() for p in polys],
        })
    return {"axis": axis.value, "slices": slices}
