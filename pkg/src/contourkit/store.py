"""Project persistence and deterministic session replay.

A project is a directory: ``project.json`` plus the referenced volume pair,
RLE mask files, transfer function and the append-only session log. Masks
round-trip bit-exactly; the session log is the source of truth for the user
mask, which replay re-derives from scratch.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .annotate import LabelVolume, apply_stroke, load_mask, save_mask
from .errors import CorruptFile, DimensionMismatch, VersionMismatch
from .geom import Pose
from .interp import interpolate_slices
from .session import SessionRecord, load_session, save_session
from .transfer import TransferFunction, grayscale_ramp
from .volume import Axis, DensityWindow, Volume, load_volume, save_volume

PROJECT_FORMAT_VERSION = 1


@dataclass
class Project:
    id: str
    volume: Volume
    masks: dict[str, LabelVolume] = field(default_factory=dict)
    tf: TransferFunction = field(default_factory=grayscale_ramp)
    window: DensityWindow = field(default_factory=DensityWindow)
    pose: Pose = field(default_factory=Pose)
    session: SessionRecord | None = None
    volume_dtype: str = "f32"

    def __post_init__(self):
        if "user" not in self.masks:
            self.masks["user"] = LabelVolume(self.volume.dims)
        for name, m in self.masks.items():
            if tuple(m.dims) != tuple(self.volume.dims):
                raise DimensionMismatch(
                    f"mask {name!r} dims {m.dims} != volume dims {self.volume.dims}")

    def meta(self) -> dict:
        return {
            "version": PROJECT_FORMAT_VERSION,
            "id": self.id,
            "volume": "volume.json",
            "masks": {name: f"{name}.mask.json" for name in sorted(self.masks)},
            "transfer_function": "tf.json",
            "window": {"lo": self.window.lo, "hi": self.window.hi},
            "pose": self.pose.to_json(),
            "session_log": "session.jsonl",
        }


def save_project(p: Project, directory: str | Path) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_volume(p.volume, directory / "volume", dtype=p.volume_dtype)
    for name, m in p.masks.items():
        save_mask(m, directory / f"{name}.mask.json")
    p.tf.save(directory / "tf.json")
    if p.session is not None:
        save_session(p.session, directory / "session.jsonl")
    meta_path = directory / "project.json"
    meta_path.write_text(json.dumps(p.meta(), indent=2) + "\n")
    return meta_path


def load_project(path: str | Path) -> Project:
    path = Path(path)
    directory = path if path.is_dir() else path.parent
    meta_path = directory / "project.json"
    try:
        meta = json.loads(meta_path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise CorruptFile(f"cannot read project metadata: {e}", field="project.json")
    version = meta.get("version")
    if version != PROJECT_FORMAT_VERSION:
        raise VersionMismatch(
            f"project format version {version!r}, expected {PROJECT_FORMAT_VERSION}")
    for key in ("id", "volume", "masks"):
        if key not in meta:
            raise CorruptFile(f"project metadata missing {key!r}", field=key)

    volume = load_volume(directory / meta["volume"])
    masks = {}
    for name, ref in meta["masks"].items():
        m = load_mask(directory / ref)
        if tuple(m.dims) != tuple(volume.dims):
            raise DimensionMismatch(
                f"mask {name!r} dims {m.dims} != volume dims {volume.dims}")
        masks[name] = m

    tf = grayscale_ramp()
    tf_ref = meta.get("transfer_function")
    if tf_ref and (directory / tf_ref).exists():
        tf = TransferFunction.load(directory / tf_ref)
    wmeta = meta.get("window", {})
    window = DensityWindow(float(wmeta.get("lo", 0.0)), float(wmeta.get("hi", 1.0)))
    pose = Pose.from_json(meta.get("pose", {}))
    session = None
    sess_ref = meta.get("session_log")
    if sess_ref and (directory / sess_ref).exists():
        session = load_session(directory / sess_ref)
    vol_meta = json.loads((directory / meta["volume"]).read_text())
    return Project(meta["id"], volume, masks, tf, window, pose, session,
                   volume_dtype=vol_meta.get("dtype", "f32"))


def surviving_mutations(events) -> list:
    """Mutation events that remain after applying undos.

    ``base`` events carry a full mask snapshot (recorded when the service
    finds out-of-band edits); they supersede everything before them and act
    as a floor that undo cannot pop past.
    """
    mutations: list = []
    floor = 0
    for e in events:
        if e.kind == "base":
            mutations = [e]
            floor = 1
        elif e.kind == "stroke_end" and e.stroke is not None:
            mutations.append(e)
        elif e.kind == "interp":
            mutations.append(e)
        elif e.kind == "undo" and len(mutations) > floor:
            mutations.pop()
    return mutations


def replay_session(p: Project, record: SessionRecord) -> LabelVolume:
    """Re-derive the user mask by applying all mutation events in order.

    ``undo`` events drop the most recent not-yet-undone mutation, so the
    result is a replay of the surviving log prefix. Deterministic: identical
    (project, log) pairs produce identical mask bits.
    """
    mask = LabelVolume(p.volume.dims)
    for e in surviving_mutations(record.events):
        if e.kind == "base":
            snap = LabelVolume.from_rle(tuple(e.payload["dims"]), e.payload["rle"])
            if tuple(snap.dims) != tuple(p.volume.dims):
                raise DimensionMismatch(
                    f"base snapshot dims {snap.dims} != volume dims {p.volume.dims}")
            mask.bits[...] = snap.bits
        elif e.kind == "stroke_end":
            apply_stroke(mask, p.volume, e.stroke)
        else:
            axis = Axis.parse(e.payload["axis"])
            keys = [int(k) for k in e.payload["keys"]]
            interpolate_slices(mask, axis, keys, p.volume.spacing)
    return mask
