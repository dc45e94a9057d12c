"""HTTP contouring service over stored projects.

Paths (all JSON unless noted):

    GET  /projects                          -> {"projects": [ids]}
    GET  /projects/{id}                     -> project metadata
    GET  /projects/{id}/slice?axis=&index=&window=lo,hi          -> PNG
    GET  /projects/{id}/render?pos=&look=&up=&size=WxH&width=mm  -> PNG
         (or orbit shorthand: ?azimuth=deg&elevation=deg)
    POST /projects/{id}/stroke              (BrushStroke JSON)   -> {maskVersion}
    POST /projects/{id}/interp              {"axis":, "keys":}   -> {maskVersion}
    POST /projects/{id}/undo                                     -> {maskVersion}
    GET  /projects/{id}/dsc?against=reference                    -> {"dsc": x}
    GET  /projects/{id}/metrics             -> metrics summary
    POST /projects/{id}/pose                (Pose JSON)          -> {"ok": true}
    GET  /projects/{id}/contours?axis=      -> ContourSet JSON
    POST /projects/{id}/session/events      (JSONL body, appended)
    GET  /projects/{id}/session             -> JSONL

Errors are 400 with {"error", "field"}, 404 for unknown projects/paths, and
409 when a mutation carries a stale maskVersion. Mutations are serialized
per project; reads run against snapshots.
"""

from __future__ import annotations

import io
import json
import math
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

import numpy as np
from PIL import Image

from .annotate import BrushStroke, LabelVolume, apply_stroke, mask_slice, save_mask
from .contours import contour_set
from .errors import ContourKitError, MalformedEvent
from .geom import Pose
from .interp import interpolate_slices
from .metrics import dsc, metrics_summary
from .render import Camera, image_to_png_bytes, render_image
from .session import SessionEvent, SessionRecord, parse_event, event_to_json
from .store import Project, load_project
from .transfer import RGBA
from .volume import Axis, DensityWindow, apply_window, extract_slice

DEFAULT_TINT = RGBA(1.0, 0.2, 0.1, 0.5)


class ApiError(Exception):
    def __init__(self, status: int, message: str, fieldname: str | None = None):
        super().__init__(message)
        self.status = status
        self.fieldname = fieldname


@dataclass
class LiveProject:
    project: Project
    directory: Path
    mask_version: int = 0
    mutations: list[SessionEvent] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def session_path(self) -> Path:
        return self.directory / "session.jsonl"

    def append_events(self, events: list[SessionEvent]) -> None:
        with self.session_path.open("a") as f:
            for e in events:
                f.write(json.dumps(event_to_json(e)) + "\n")

    def record(self) -> SessionRecord:
        from .session import parse_session_jsonl
        if self.session_path.exists():
            return parse_session_jsonl(self.session_path.read_text())
        return SessionRecord(0.0, [])


def _as_record(events: list[SessionEvent]) -> SessionRecord:
    anchor = min(0.0, events[0].t) if events else 0.0
    return SessionRecord(anchor, events)


class ProjectRegistry:
    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self._live: dict[str, LiveProject] = {}
        self._lock = threading.Lock()

    def ids(self) -> list[str]:
        found = set(self._live)
        if self.data_dir.is_dir():
            for p in self.data_dir.iterdir():
                if (p / "project.json").exists():
                    found.add(p.name)
        return sorted(found)

    def get(self, project_id: str) -> LiveProject:
        with self._lock:
            if project_id in self._live:
                return self._live[project_id]
            directory = self.data_dir / project_id
            if not (directory / "project.json").exists():
                raise ApiError(404, f"unknown project {project_id!r}", "id")
            project = load_project(directory)
            live = LiveProject(project, directory)
            from .store import replay_session, surviving_mutations
            events = project.session.events if project.session else []
            live.mutations = surviving_mutations(events)
            # Out-of-band edits (e.g. CLI paint) are not in the log. Snapshot
            # the on-disk mask as the session base so replay and undo keep it.
            derived = replay_session(project, _as_record(live.mutations))
            disk = project.masks["user"]
            if not np.array_equal(derived.bits, disk.bits):
                t = events[-1].t if events else 0.0
                base = SessionEvent(t, "base",
                                    payload={"dims": list(disk.dims),
                                             "rle": disk.to_rle()})
                live.append_events([base])
                live.mutations = [base]
            self._live[project_id] = live
            return live


def _parse_triple(q, key, default=None):
    if key not in q:
        if default is None:
            raise ApiError(400, f"missing query parameter {key!r}", key)
        return np.asarray(default, dtype=np.float64)
    try:
        parts = [float(x) for x in q[key][0].split(",")]
        if len(parts) != 3:
            raise ValueError
        return np.asarray(parts, dtype=np.float64)
    except ValueError:
        raise ApiError(400, f"bad triple for {key!r}: {q[key][0]!r}", key)


def _parse_window(q) -> DensityWindow:
    if "window" not in q:
        return DensityWindow()
    try:
        lo, hi = (float(x) for x in q["window"][0].split(","))
        return DensityWindow(lo, hi)
    except ValueError as e:
        raise ApiError(400, f"bad window: {e}", "window")


def _parse_tint(q) -> RGBA:
    if "tint" not in q:
        return DEFAULT_TINT
    try:
        r, g, b, a = (float(x) for x in q["tint"][0].split(","))
        return RGBA(r, g, b, a)
    except ValueError:
        raise ApiError(400, f"bad tint: {q['tint'][0]!r}", "tint")


def orbit_camera(center, distance: float, azimuth_deg: float, elevation_deg: float,
                 image_size, world_width: float) -> Camera:
    """Camera on a sphere around ``center``, looking inward."""
    az = math.radians(azimuth_deg)
    el = math.radians(elevation_deg)
    d = np.array([math.cos(el) * math.cos(az),
                  math.cos(el) * math.sin(az),
                  math.sin(el)])
    up = np.array([-math.sin(el) * math.cos(az),
                   -math.sin(el) * math.sin(az),
                   math.cos(el)])
    pos = np.asarray(center, dtype=np.float64) + distance * d
    return Camera(pos, -d, up, tuple(image_size), world_width)


def slice_png(project: Project, mask: LabelVolume, axis: Axis, index: int,
              window: DensityWindow, tint: RGBA) -> bytes:
    """Grayscale slice with the mask tinted on top; (u, v) -> (col, row)."""
    sl = extract_slice(project.volume, axis, index)
    gray = apply_window(sl.grid.astype(np.float64), window)
    bits = mask_slice(mask, axis, index)
    rgb = np.repeat(gray[:, :, None], 3, axis=2)
    tintc = np.array([tint.r, tint.g, tint.b], dtype=np.float64)
    rgb[bits] = rgb[bits] * (1.0 - tint.a) + tintc[None, :] * tint.a
    rgba = np.concatenate([rgb, np.ones_like(gray)[:, :, None]], axis=2)
    # grid is (u, v); PNG rows are v, columns are u
    img = np.transpose(rgba, (1, 0, 2))
    q = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(q, mode="RGBA").save(buf, format="PNG")
    return buf.getvalue()


class ContourHandler(BaseHTTPRequestHandler):
    registry: ProjectRegistry  # set by make_server
    static_dir: Path | None = None

    # -- plumbing ----------------------------------------------------------

    def log_message(self, fmt, *args):
        return

    def _send(self, status: int, body: bytes, content_type: str) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.end_headers()
        self.wfile.write(body)

    def _json(self, payload, status: int = 200) -> None:
        self._send(status, json.dumps(payload).encode(), "application/json")

    def _error(self, e: ApiError) -> None:
        body = {"error": str(e)}
        if e.fieldname:
            body["field"] = e.fieldname
        self._json(body, e.status)

    def _read_body(self) -> bytes:
        length = int(self.headers.get("Content-Length", "0"))
        return self.rfile.read(length) if length > 0 else b""

    def _read_json(self) -> dict:
        raw = self._read_body()
        try:
            return json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise ApiError(400, f"invalid JSON body: {e}", "body")

    def do_OPTIONS(self):
        self._send(204, b"", "text/plain")

    # -- routing -----------------------------------------------------------

    def do_GET(self):
        try:
            url = urlparse(self.path)
            q = parse_qs(url.query)
            parts = [p for p in url.path.split("/") if p]
            if parts == ["projects"]:
                self._json({"projects": self.registry.ids()})
                return
            if len(parts) >= 2 and parts[0] == "projects":
                live = self.registry.get(parts[1])
                rest = parts[2:]
                if not rest:
                    self._project_meta(live)
                elif rest == ["slice"]:
                    self._slice(live, q)
                elif rest == ["render"]:
                    self._render(live, q)
                elif rest == ["dsc"]:
                    self._dsc(live, q)
                elif rest == ["metrics"]:
                    self._json(metrics_summary(live.record()))
                elif rest == ["contours"]:
                    self._contours(live, q)
                elif rest == ["session"]:
                    text = (live.session_path.read_text()
                            if live.session_path.exists() else "")
                    self._send(200, text.encode(), "application/x-ndjson")
                else:
                    raise ApiError(404, f"unknown path {url.path!r}")
                return
            if self.static_dir is not None:
                self._static(url.path)
                return
            raise ApiError(404, f"unknown path {url.path!r}")
        except ApiError as e:
            self._error(e)
        except ContourKitError as e:
            self._error(ApiError(400, str(e)))
        except Exception as e:  # defensive: never kill the connection thread
            self._error(ApiError(500, f"internal error: {e}"))

    def do_POST(self):
        try:
            url = urlparse(self.path)
            parts = [p for p in url.path.split("/") if p]
            if len(parts) == 3 and parts[0] == "projects":
                live = self.registry.get(parts[1])
                if parts[2] == "stroke":
                    self._stroke(live)
                    return
                if parts[2] == "interp":
                    self._interp(live)
                    return
                if parts[2] == "undo":
                    self._undo(live)
                    return
                if parts[2] == "pose":
                    self._pose(live)
                    return
            if len(parts) == 4 and parts[0] == "projects" and parts[2] == "session" \
                    and parts[3] == "events":
                live = self.registry.get(parts[1])
                self._session_append(live)
                return
            raise ApiError(404, f"unknown path {url.path!r}")
        except ApiError as e:
            self._error(e)
        except ContourKitError as e:
            self._error(ApiError(400, str(e)))
        except Exception as e:
            self._error(ApiError(500, f"internal error: {e}"))

    # -- GET handlers --------------------------------------------------------

    def _project_meta(self, live: LiveProject) -> None:
        p = live.project
        self._json({
            "id": p.id,
            "dims": list(p.volume.dims),
            "spacing_mm": list(p.volume.spacing),
            "raw_range": list(p.volume.raw_range),
            "window": {"lo": p.window.lo, "hi": p.window.hi},
            "pose": p.pose.to_json(),
            "masks": sorted(p.masks),
            "maskVersion": live.mask_version,
        })

    def _slice(self, live: LiveProject, q) -> None:
        if "axis" not in q or "index" not in q:
            raise ApiError(400, "slice needs axis and index", "axis")
        axis = Axis.parse(q["axis"][0])
        try:
            index = int(q["index"][0])
        except ValueError:
            raise ApiError(400, f"bad index {q['index'][0]!r}", "index")
        window = _parse_window(q)
        tint = _parse_tint(q)
        with live.lock:
            mask = live.project.masks["user"].copy()
        png = slice_png(live.project, mask, axis, index, window, tint)
        self._send(200, png, "image/png")

    def _render(self, live: LiveProject, q) -> None:
        p = live.project
        extent = np.asarray(p.volume.world_extent, dtype=np.float64)
        center = extent / 2.0
        size = (256, 256)
        if "size" in q:
            try:
                w, h = (int(x) for x in q["size"][0].lower().split("x"))
                size = (w, h)
            except ValueError:
                raise ApiError(400, f"bad size {q['size'][0]!r}", "size")
        world_width = float(q["width"][0]) if "width" in q else 1.4 * float(extent.max())
        steps = int(q["steps"][0]) if "steps" in q else 256
        if "azimuth" in q or "elevation" in q:
            az = float(q.get("azimuth", ["0"])[0])
            el = float(q.get("elevation", ["0"])[0])
            cam = orbit_camera(center, 4.0 * float(extent.max()) + 1.0, az, el,
                               size, world_width)
        else:
            pos = _parse_triple(q, "pos")
            look = _parse_triple(q, "look", default=center)
            up = _parse_triple(q, "up", default=(0.0, 0.0, 1.0))
            cam = Camera.from_look_at(pos, look, up, size, world_width)
        window = _parse_window(q) if "window" in q else p.window
        tint = _parse_tint(q)
        with live.lock:
            mask = p.masks["user"].copy()
        img = render_image(p.volume, mask, p.tf, window, cam, tint,
                           pose=p.pose, steps=steps, threads=4)
        self._send(200, image_to_png_bytes(img), "image/png")

    def _dsc(self, live: LiveProject, q) -> None:
        against = q.get("against", ["reference"])[0]
        p = live.project
        if against not in p.masks:
            raise ApiError(400, f"no mask named {against!r}", "against")
        with live.lock:
            value = dsc(p.masks["user"], p.masks[against])
        self._json({"dsc": value})

    def _contours(self, live: LiveProject, q) -> None:
        axis = Axis.parse(q.get("axis", ["transverse"])[0])
        with live.lock:
            mask = live.project.masks["user"].copy()
        self._json(contour_set(mask, axis, live.project.volume.spacing))

    def _static(self, path: str) -> None:
        rel = path.lstrip("/") or "index.html"
        target = (self.static_dir / rel).resolve()
        if not str(target).startswith(str(self.static_dir.resolve())) or not target.is_file():
            raise ApiError(404, f"no such file {path!r}")
        ctype = {
            ".html": "text/html", ".js": "text/javascript", ".css": "text/css",
            ".png": "image/png", ".json": "application/json",
        }.get(target.suffix, "application/octet-stream")
        self._send(200, target.read_bytes(), ctype)

    # -- POST handlers -------------------------------------------------------

    def _check_version(self, live: LiveProject, body: dict) -> None:
        want = body.get("maskVersion")
        if want is not None and int(want) != live.mask_version:
            raise ApiError(409, f"maskVersion {want} is stale "
                                f"(current {live.mask_version})", "maskVersion")

    def _commit(self, live: LiveProject, events: list[SessionEvent]) -> None:
        save_mask(live.project.masks["user"], live.directory / "user.mask.json")
        live.append_events(events)
        live.mask_version += 1

    def _stroke(self, live: LiveProject) -> None:
        body = self._read_json()
        try:
            stroke = BrushStroke.from_json(body)
        except (KeyError, ValueError, TypeError) as e:
            raise ApiError(400, f"bad stroke: {e}", "stroke")
        with live.lock:
            self._check_version(live, body)
            apply_stroke(live.project.masks["user"], live.project.volume, stroke)
            start = SessionEvent(stroke.timestamp_ms, "stroke_start")
            end = SessionEvent(stroke.timestamp_ms, "stroke_end", stroke=stroke)
            live.mutations.append(end)
            self._commit(live, [start, end])
            version = live.mask_version
        self._json({"maskVersion": version})

    def _interp(self, live: LiveProject) -> None:
        body = self._read_json()
        if "axis" not in body or "keys" not in body:
            raise ApiError(400, "interp needs axis and keys", "keys")
        axis = Axis.parse(body["axis"])
        keys = [int(k) for k in body["keys"]]
        with live.lock:
            self._check_version(live, body)
            interpolate_slices(live.project.masks["user"], axis, keys,
                               live.project.volume.spacing)
            t = float(body.get("t", 0.0))
            ev = SessionEvent(t, "interp",
                              payload={"axis": axis.value, "keys": keys})
            live.mutations.append(ev)
            self._commit(live, [ev])
            version = live.mask_version
        self._json({"maskVersion": version})

    def _undo(self, live: LiveProject) -> None:
        from .store import replay_session
        raw = self._read_body()
        t = float(json.loads(raw or b"{}").get("t", 0.0))
        with live.lock:
            floor = 1 if live.mutations and live.mutations[0].kind == "base" else 0
            if len(live.mutations) > floor:
                live.mutations.pop()
            mask = replay_session(live.project, _as_record(list(live.mutations)))
            live.project.masks["user"].bits[...] = mask.bits
            self._commit(live, [SessionEvent(t, "undo")])
            version = live.mask_version
        self._json({"maskVersion": version})

    def _pose(self, live: LiveProject) -> None:
        body = self._read_json()
        try:
            pose = Pose.from_json(body)
        except (ContourKitError, ValueError, TypeError) as e:
            raise ApiError(400, f"bad pose: {e}", "pose")
        with live.lock:
            live.project.pose = pose
            meta_path = live.directory / "project.json"
            meta = live.project.meta()
            meta_path.write_text(json.dumps(meta, indent=2) + "\n")
        self._json({"ok": True})

    def _session_append(self, live: LiveProject) -> None:
        raw = self._read_body().decode("utf-8", errors="replace")
        events = []
        for ln, line in enumerate(raw.splitlines(), start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ApiError(400, f"line {ln}: invalid JSON: {e.msg}", "body")
            try:
                events.append(parse_event(obj, ln))
            except MalformedEvent as e:
                raise ApiError(400, str(e), "body")
        with live.lock:
            live.append_events(events)
        self._json({"appended": len(events)})


def make_server(data_dir: str | Path, host: str = "127.0.0.1", port: int = 0,
                static_dir: str | Path | None = None) -> ThreadingHTTPServer:
    registry = ProjectRegistry(data_dir)
    handler = type("BoundHandler", (ContourHandler,), {
        "registry": registry,
        "static_dir": Path(static_dir) if static_dir else None,
    })
    return ThreadingHTTPServer((host, port), handler)


def serve_forever(data_dir: str | Path, host: str, port: int,
                  static_dir: str | Path | None = None) -> None:
    server = make_server(data_dir, host, port, static_dir)
    addr = server.server_address
    print(f"contouring service on http://{addr[0]}:{addr[1]} (data: {data_dir})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
