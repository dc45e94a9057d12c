"""Quantitative evaluation: mask overlap, timing, and gaze attention.

The attention pipeline follows the measurement protocol: frames moving at
>= 150 deg/s are discarded as saccades, task progress is normalized by the
overall completion time, and attention is the share of retained frames per
1% progress window that hit the tablet (2D) or the volume (3D).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .annotate import LabelVolume
from .errors import DimensionMismatch, NonIncreasingTime, NoSessionEnd, NoStroke
from .session import GazeSample, HitTarget, SessionRecord

SACCADE_THRESHOLD_DEG_S = 150.0


def dsc(x: LabelVolume, y: LabelVolume) -> float:
    """Dice similarity coefficient 2|X n Y| / (|X| + |Y|).

    Summing per slice or over the whole volume is equivalent; both masks
    empty counts as perfect (vacuous) agreement = 1.0.
    """
    if tuple(x.dims) != tuple(y.dims):
        raise DimensionMismatch(f"mask dims differ: {x.dims} vs {y.dims}")
    inter = int(np.logical_and(x.bits, y.bits).sum())
    total = x.count() + y.count()
    if total == 0:
        return 1.0
    return 2.0 * inter / total


@dataclass(frozen=True)
class TemporalMetrics:
    initial_exploration_ms: float
    overall_tct_ms: float


def temporal_metrics(record: SessionRecord) -> TemporalMetrics:
    """Initial exploration (anchor -> first stroke) and overall TCT (anchor -> end)."""
    first_stroke = next((e.t for e in record.events if e.kind == "stroke_start"), None)
    if first_stroke is None:
        raise NoStroke("session has no stroke_start event")
    end = next((e.t for e in record.events if e.kind == "end"), None)
    if end is None:
        raise NoSessionEnd("session has no end event")
    return TemporalMetrics(first_stroke - record.anchor_time, end - record.anchor_time)


def angular_speed(g1: GazeSample, g2: GazeSample) -> float:
    """Gaze angular speed between two samples, degrees per second."""
    if g2.t <= g1.t:
        raise NonIncreasingTime(f"t2={g2.t} must exceed t1={g1.t}")
    cosang = float(np.clip(np.dot(g1.dir, g2.dir), -1.0, 1.0))
    deg = math.degrees(math.acos(cosang))
    return deg / ((g2.t - g1.t) / 1000.0)


def filter_saccades(
    samples: list[GazeSample],
    threshold: float = SACCADE_THRESHOLD_DEG_S,
) -> list[GazeSample]:
    """Drop frames whose speed from the preceding frame is >= threshold.

    The first sample is always retained; the comparison is inclusive, so a
    frame moving at exactly the threshold counts as saccade.
    """
    if not samples:
        return []
    out = [samples[0]]
    for prev, cur in zip(samples, samples[1:]):
        if angular_speed(prev, cur) < threshold:
            out.append(cur)
    return out


@dataclass(frozen=True)
class AttentionPoint:
    progress_pct: int      # 1..100
    tablet_pct: float
    volume_pct: float
    empty: bool = False    # no retained frames fell in this window


@dataclass(frozen=True)
class AttentionSeries:
    points: tuple[AttentionPoint, ...]


def attention_series(record: SessionRecord, samples: list[GazeSample] | None = None
                     ) -> AttentionSeries:
    """Per-1%-of-TCT attention split between tablet and volume.

    ``samples`` should already be saccade-filtered; defaults to the record's
    raw gaze stream. Window p covers [ (p-1)%, p% ) of TCT after anchoring;
    windows with no retained frames report (0, 0) and are flagged.
    """
    tm = temporal_metrics(record)
    if samples is None:
        samples = record.gaze_samples()
    times = np.asarray([s.t - record.anchor_time for s in samples], dtype=np.float64)
    hits = [s.hit for s in samples]
    width = tm.overall_tct_ms / 100.0
    points = []
    for p in range(1, 101):
        lo, hi = (p - 1) * width, p * width
        in_win = [h for t, h in zip(times, hits) if lo <= t < hi]
        if not in_win:
            points.append(AttentionPoint(p, 0.0, 0.0, empty=True))
            continue
        n = len(in_win)
        tab = 100.0 * sum(1 for h in in_win if h is HitTarget.TABLET) / n
        vol = 100.0 * sum(1 for h in in_win if h is HitTarget.VOLUME) / n
        points.append(AttentionPoint(p, tab, vol))
    return AttentionSeries(tuple(points))


def gaze_report(record: SessionRecord, threshold: float = SACCADE_THRESHOLD_DEG_S
                ) -> AttentionSeries:
    """Saccade filtering followed by attention windowing, as one pipeline."""
    retained = filter_saccades(record.gaze_samples(), threshold)
    return attention_series(record, retained)


def attention_csv(series: AttentionSeries) -> str:
    lines = ["progress,tabletPct,volumePct"]
    for p in series.points:
        lines.append(f"{p.progress_pct},{p.tablet_pct:.6g},{p.volume_pct:.6g}")
    return "\n".join(lines) + "\n"


def metrics_summary(record: SessionRecord, threshold: float = SACCADE_THRESHOLD_DEG_S) -> dict:
    """JSON-ready summary: temporal metrics plus the attention series."""
    out: dict = {"complete": True}
    try:
        tm = temporal_metrics(record)
        out["initial_exploration_ms"] = tm.initial_exploration_ms
        out["overall_tct_ms"] = tm.overall_tct_ms
    except (NoStroke, NoSessionEnd) as e:
        out.update({"complete": False, "reason": str(e),
                    "initial_exploration_ms": None, "overall_tct_ms": None})
        return out
    raw = record.gaze_samples()
    out["gaze_samples"] = len(raw)
    if raw:
        retained = filter_saccades(raw, threshold)
        series = attention_series(record, retained)
        out["gaze_retained"] = len(retained)
        out["attention"] = [
            {"progress": p.progress_pct, "tabletPct": p.tablet_pct,
             "volumePct": p.volume_pct, "empty": p.empty}
            for p in series.points
        ]
    return out
