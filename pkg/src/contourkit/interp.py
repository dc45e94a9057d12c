"""Inter-slice interpolation: fill slices between contoured keys by linear
blending of signed distance fields, then thresholding at zero.

The SDF of a slice is the exact Euclidean distance transform (in mm) between
voxel centers, negative inside the mask. An empty slice takes a flat
positive sentinel equal to the slice diagonal -- the largest possible true
distance -- so interpolating toward an empty key shrinks the structure
gradually to extinction, the way contours terminate at organ ends.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import distance_transform_edt

from .annotate import LabelVolume
from .errors import IndexOutOfRange, NeedTwoKeys, UnsortedKeys
from .volume import Axis


@dataclass(frozen=True)
class SignedDistanceField:
    """Per-voxel mm distance to the mask boundary; negative inside."""

    grid: np.ndarray


def _diagonal(shape, spacing) -> float:
    return float(np.hypot(shape[0] * spacing[0], shape[1] * spacing[1]))


def signed_distance(mask: np.ndarray, spacing=(1.0, 1.0)) -> SignedDistanceField:
    """Signed Euclidean distance field of a 2D binary mask, in mm."""
    mask = np.asarray(mask, dtype=bool)
    sentinel = _diagonal(mask.shape, spacing)
    if not mask.any():
        return SignedDistanceField(np.full(mask.shape, sentinel, dtype=np.float64))
    if mask.all():
        return SignedDistanceField(np.full(mask.shape, -sentinel, dtype=np.float64))
    sampling = (float(spacing[0]), float(spacing[1]))
    d_out = distance_transform_edt(~mask, sampling=sampling)
    d_in = distance_transform_edt(mask, sampling=sampling)
    return SignedDistanceField(d_out - d_in)


def interpolate_slices(
    m: LabelVolume,
    axis: Axis,
    key_indices,
    spacing=(1.0, 1.0, 1.0),
) -> LabelVolume:
    """Fill every slice strictly between consecutive key slices.

    Intermediate slice j between keys a < b becomes the sub-zero set of
    (1-t)*SDF_a + t*SDF_b with t = (j-a)/(b-a). Key slices are never
    modified; slices outside [first, last] key are untouched.
    """
    keys = [int(k) for k in key_indices]
    if len(keys) < 2:
        raise NeedTwoKeys(f"need >= 2 key slices, got {len(keys)}")
    if any(b <= a for a, b in zip(keys, keys[1:])):
        raise UnsortedKeys(f"key indices must strictly increase, got {keys}")
    ax = axis.volume_axis
    n = m.dims[ax]
    if keys[0] < 0 or keys[-1] >= n:
        raise IndexOutOfRange(f"key indices {keys} outside [0, {n})")

    a1, a2 = axis.plane_axes
    plane_spacing = (spacing[a1], spacing[a2])

    def plane(index):
        sl = [slice(None)] * 3
        sl[ax] = index
        return m.bits[tuple(sl)]

    sdfs = {k: signed_distance(plane(k), plane_spacing).grid for k in keys}
    for a, b in zip(keys, keys[1:]):
        sa, sb = sdfs[a], sdfs[b]
        for j in range(a + 1, b):
            # weights by direct division so a->b at t and b->a at 1-t blend
            # with bitwise-identical coefficients
            wa = (b - j) / (b - a)
            wb = (j - a) / (b - a)
            plane(j)[...] = (wa * sa + wb * sb) < 0.0
    return m
