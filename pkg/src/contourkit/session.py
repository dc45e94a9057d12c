"""Session logs: the timestamped event stream recorded while contouring.

Wire format is JSON-lines, one event per line:

    {"t": <ms>, "kind": "anchor|stroke_start|stroke_end|slice_change|gaze|interp|undo|end", ...}

* ``stroke_end`` events may carry the committed stroke under ``"stroke"``;
* ``gaze`` events carry ``{"dir": [x, y, z], "hit": "tablet|volume|none"}``;
* ``interp`` events carry ``{"axis": ..., "keys": [...]}``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .annotate import BrushStroke
from .errors import MalformedEvent


class HitTarget(Enum):
    TABLET = "tablet"
    VOLUME = "volume"
    NONE = "none"


@dataclass(frozen=True)
class GazeSample:
    t: float                      # ms
    dir: np.ndarray               # unit vector
    hit: HitTarget

    def __post_init__(self):
        d = np.asarray(self.dir, dtype=np.float64)
        if d.shape != (3,) or abs(np.linalg.norm(d) - 1.0) > 1e-6:
            raise ValueError(f"gaze direction must be a unit 3-vector, got {self.dir}")
        object.__setattr__(self, "dir", d)


EVENT_KINDS = {"anchor", "stroke_start", "stroke_end", "slice_change", "gaze",
               "interp", "undo", "end", "base"}


@dataclass(frozen=True)
class SessionEvent:
    t: float
    kind: str
    stroke: BrushStroke | None = None
    gaze: GazeSample | None = None
    payload: dict = field(default_factory=dict)


@dataclass
class SessionRecord:
    """Anchored event stream; all timestamps in ms."""

    anchor_time: float
    events: list[SessionEvent]

    def __post_init__(self):
        if self.events and self.anchor_time > self.events[0].t:
            raise ValueError("anchor time must not exceed the first event time")

    def gaze_samples(self) -> list[GazeSample]:
        return [e.gaze for e in self.events if e.kind == "gaze"]


def parse_event(obj: dict, line: int) -> SessionEvent:
    if not isinstance(obj, dict):
        raise MalformedEvent("event is not a JSON object", line)
    kind = obj.get("kind")
    if kind not in EVENT_KINDS:
        raise MalformedEvent(f"unknown event kind {kind!r}", line)
    if "t" not in obj:
        raise MalformedEvent("event missing timestamp 't'", line)
    try:
        t = float(obj["t"])
    except (TypeError, ValueError):
        raise MalformedEvent(f"bad timestamp {obj['t']!r}", line)
    if not math.isfinite(t):
        raise MalformedEvent(f"bad timestamp {obj['t']!r}", line)
    stroke = None
    gaze = None
    if kind == "stroke_end" and "stroke" in obj:
        try:
            stroke = BrushStroke.from_json(obj["stroke"])
        except (KeyError, ValueError, TypeError) as e:
            raise MalformedEvent(f"bad stroke payload: {e}", line)
    if kind == "gaze":
        try:
            gaze = GazeSample(t, np.asarray(obj["dir"], dtype=np.float64),
                              HitTarget(obj["hit"]))
        except (KeyError, ValueError, TypeError) as e:
            raise MalformedEvent(f"bad gaze payload: {e}", line)
    extra = {k: v for k, v in obj.items() if k not in ("t", "kind", "stroke", "dir", "hit")}
    return SessionEvent(t, kind, stroke=stroke, gaze=gaze, payload=extra)


def parse_session_jsonl(text: str) -> SessionRecord:
    """Parse a JSONL log into a SessionRecord; anchor defaults to the first event."""
    events: list[SessionEvent] = []
    anchor: float | None = None
    for ln, raw in enumerate(text.splitlines(), start=1):
        raw = raw.strip()
        if not raw:
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as e:
            raise MalformedEvent(f"invalid JSON: {e.msg}", ln)
        ev = parse_event(obj, ln)
        if ev.kind == "anchor":
            anchor = ev.t if anchor is None else anchor
        events.append(ev)
    if anchor is None:
        anchor = events[0].t if events else 0.0
    return SessionRecord(anchor, events)


def event_to_json(e: SessionEvent) -> dict:
    obj: dict = {"t": e.t, "kind": e.kind}
    if e.stroke is not None:
        obj["stroke"] = e.stroke.to_json()
    if e.gaze is not None:
        obj["dir"] = e.gaze.dir.tolist()
        obj["hit"] = e.gaze.hit.value
    obj.update(e.payload)
    return obj


def session_to_jsonl(record: SessionRecord) -> str:
    lines = []
    has_anchor = any(e.kind == "anchor" for e in record.events)
    if not has_anchor:
        lines.append(json.dumps({"t": record.anchor_time, "kind": "anchor"}))
    lines.extend(json.dumps(event_to_json(e)) for e in record.events)
    return "\n".join(lines) + ("\n" if lines else "")


def load_session(path: str | Path) -> SessionRecord:
    return parse_session_jsonl(Path(path).read_text())


def save_session(record: SessionRecord, path: str | Path) -> None:
    Path(path).write_text(session_to_jsonl(record))
