"""Pure geometry for 3D-view manipulation: poses, quaternions, two-ray placement."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import NonUnitQuaternion, ParallelRays
from .render import Ray

_UNIT_TOL = 1e-6


def quat_normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    n = float(np.linalg.norm(q))
    if n == 0.0:
        raise NonUnitQuaternion("zero quaternion")
    return q / n


def _check_unit(q) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (4,):
        raise NonUnitQuaternion(f"quaternion must have 4 components, got shape {q.shape}")
    if abs(np.linalg.norm(q) - 1.0) > _UNIT_TOL:
        raise NonUnitQuaternion(f"|q| = {np.linalg.norm(q)} is not 1 within {_UNIT_TOL}")
    return q


def quat_conjugate(q) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_multiply(a, b) -> np.ndarray:
    aw, ax, ay, az = np.asarray(a, dtype=np.float64)
    bw, bx, by, bz = np.asarray(b, dtype=np.float64)
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_from_axis_angle(axis, angle_rad: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    half = angle_rad / 2.0
    return np.concatenate([[np.cos(half)], np.sin(half) * axis])


def quat_rotate_vec(q, v) -> np.ndarray:
    return quat_rotate_many(q, np.asarray(v, dtype=np.float64).reshape(1, 3))[0]


def quat_rotate_many(q, vs: np.ndarray) -> np.ndarray:
    """Rotate an (N, 3) batch by one quaternion (w, x, y, z)."""
    q = np.asarray(q, dtype=np.float64)
    w, u = q[0], q[1:]
    vs = np.asarray(vs, dtype=np.float64)
    t = 2.0 * np.cross(np.broadcast_to(u, vs.shape), vs)
    return vs + w * t + np.cross(np.broadcast_to(u, vs.shape), t)


IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


@dataclass(frozen=True)
class Pose:
    """Placement of the volume in world space: translation, rotation, uniform scale."""

    translation: np.ndarray = None
    rotation: np.ndarray = None
    scale: float = 1.0

    def __post_init__(self):
        t = np.zeros(3) if self.translation is None else np.asarray(self.translation, np.float64)
        q = IDENTITY_QUAT.copy() if self.rotation is None else _check_unit(self.rotation)
        object.__setattr__(self, "translation", t)
        object.__setattr__(self, "rotation", q)
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    def to_json(self) -> dict:
        return {
            "translation": self.translation.tolist(),
            "rotation": self.rotation.tolist(),
            "scale": self.scale,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Pose":
        return cls(
            translation=np.asarray(obj.get("translation", [0, 0, 0]), dtype=np.float64),
            rotation=np.asarray(obj.get("rotation", [1, 0, 0, 0]), dtype=np.float64),
            scale=float(obj.get("scale", 1.0)),
        )


IDENTITY_POSE = Pose()


def shortest_segment_midpoint(a: Ray, b: Ray) -> np.ndarray:
    """Placement point from two pointing rays.

    Solves the closest approach of the two infinite lines, clamps both
    parameters to >= 0 (rays have no backward extent), and returns the
    midpoint of the resulting segment.
    """
    da, db = a.dir, b.dir
    cross = np.cross(da, db)
    if np.linalg.norm(cross) < 1e-9:
        raise ParallelRays("ray directions are (near-)parallel")
    w0 = a.origin - b.origin
    dot = float(np.dot(da, db))
    denom = 1.0 - dot * dot
    t = (dot * float(np.dot(w0, db)) - float(np.dot(w0, da))) / denom
    s = (float(np.dot(w0, db)) - dot * float(np.dot(w0, da))) / denom
    t = max(t, 0.0)
    s = max(s, 0.0)
    pa = a.origin + t * da
    pb = b.origin + s * db
    return (pa + pb) / 2.0


def apply_rotation(p: Pose, anchor_rotation) -> Pose:
    """Absolute rotation mapping: the anchor's quaternion replaces the pose's."""
    q = _check_unit(anchor_rotation)
    return replace(p, rotation=q)


def set_translation(p: Pose, target) -> Pose:
    """Anchor the volume at a new place; rotation and scale unchanged."""
    return replace(p, translation=np.asarray(target, dtype=np.float64))
