"""1D transfer functions: piecewise-linear density -> RGBA classification."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np


class RGBA(NamedTuple):
    """Straight (non-premultiplied) color paired with opacity, all in [0, 1]."""

    r: float
    g: float
    b: float
    a: float


TRANSPARENT = RGBA(0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class TransferFunction:
    """Ordered control points mapping normalized density to color + opacity.

    Densities must strictly increase, starting at 0 and ending at 1; between
    control points both color and alpha interpolate linearly.
    """

    densities: tuple[float, ...]
    colors: tuple[tuple[float, float, float], ...]
    alphas: tuple[float, ...]

    def __post_init__(self):
        n = len(self.densities)
        if n < 2 or len(self.colors) != n or len(self.alphas) != n:
            raise ValueError("transfer function needs >= 2 aligned control points")
        d = np.asarray(self.densities, dtype=np.float64)
        if d[0] != 0.0 or d[-1] != 1.0:
            raise ValueError("control points must span density 0 to 1")
        if not np.all(np.diff(d) > 0):
            raise ValueError("control point densities must strictly increase")
        for c in self.colors:
            if len(c) != 3 or any(not (0.0 <= x <= 1.0) for x in c):
                raise ValueError(f"color out of range: {c}")
        if any(not (0.0 <= a <= 1.0) for a in self.alphas):
            raise ValueError("alpha out of range")

    @classmethod
    def from_points(cls, points) -> "TransferFunction":
        """Build from an iterable of (density, (r, g, b), alpha)."""
        ds, cs, As = [], [], []
        for d, c, a in points:
            ds.append(float(d))
            cs.append(tuple(float(x) for x in c))
            As.append(float(a))
        return cls(tuple(ds), tuple(cs), tuple(As))

    def _tables(self) -> tuple[np.ndarray, np.ndarray]:
        d = np.asarray(self.densities, dtype=np.float64)
        rgba = np.column_stack([
            np.asarray([c[0] for c in self.colors], dtype=np.float64),
            np.asarray([c[1] for c in self.colors], dtype=np.float64),
            np.asarray([c[2] for c in self.colors], dtype=np.float64),
            np.asarray(self.alphas, dtype=np.float64),
        ])
        return d, rgba

    def to_json(self) -> dict:
        return {
            "points": [
                {"density": d, "color": list(c), "alpha": a}
                for d, c, a in zip(self.densities, self.colors, self.alphas)
            ]
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TransferFunction":
        return cls.from_points(
            (p["density"], p["color"], p["alpha"]) for p in obj["points"])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "TransferFunction":
        return cls.from_json(json.loads(Path(path).read_text()))


def tf_eval(tf: TransferFunction, d: float) -> RGBA:
    """Classify one density: piecewise-linear interpolation of the control points."""
    vals = tf_eval_many(tf, np.asarray([d], dtype=np.float64))[0]
    return RGBA(float(vals[0]), float(vals[1]), float(vals[2]), float(vals[3]))


def tf_eval_many(tf: TransferFunction, d: np.ndarray) -> np.ndarray:
    """Classify a batch of densities; returns an (N, 4) float64 array."""
    xp, rgba = tf._tables()
    d = np.asarray(d, dtype=np.float64)
    out = np.empty((len(d), 4), dtype=np.float64)
    for ch in range(4):
        out[:, ch] = np.interp(d, xp, rgba[:, ch])
    return out


def grayscale_ramp(max_alpha: float = 1.0) -> TransferFunction:
    """Default classification: density maps to gray level and opacity linearly."""
    return TransferFunction.from_points([
        (0.0, (0.0, 0.0, 0.0), 0.0),
        (1.0, (1.0, 1.0, 1.0), max_alpha),
    ])
