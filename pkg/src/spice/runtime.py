"""Session runtime: configuration, trace files, replay, simulation, live loop.

One fold (pose -> zone membership -> dial -> recipe session -> display)
backs both operating modes. Replay drives it with virtual time read from a
trace file and is fully deterministic; live mode drives it from a UDP
socket and fans results out to the event peer and the UI channel.

Trace files reuse the bridge framing (length-prefixed canonical-JSON
envelopes), so a captured live input stream replays unmodified. A trace
holds input records only, on three topics:

    pose       payload {"datagram": "<hex>"}   one tracker datagram, verbatim
    detection  payload {"image_ref": "<name>"} a camera frame to analyze
    command    payload {"action": ...}         an operator/UI command

The replay event log is the derived-output side: one canonical-JSON
envelope per line, newline terminated, so identical runs produce
byte-identical logs and a golden file diffs cleanly.
"""

import json
import math
import os
import socket
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .bridge import (
    EventBus,
    EventEnvelope,
    MalformedEvent,
    SequenceFilter,
    UdpEventPublisher,
    UiChannelServer,
    encode_event,
    iter_frames,
    write_frames,
)
from .detection import AdapterRefusal, AdapterTimeout, MockVisionAdapter, LiveVisionAdapter, detect_ingredients, read_ppm
from .dial import DEFAULT_DETENT_RAD, DEFAULT_JITTER_FLOOR_RAD, DialState, dial_update
from .recipes import (
    Recipe,
    apply_nav,
    display_payload,
    load_recipe_library,
    match_recipe,
    new_session,
    session_snapshot,
)
from .rotations import yaw_quat
from .scene import AgentRegistry, Workspace, ZoneMembership, load_workspace, table_to_projector
from .tracking import (
    MarkerTemplate,
    PoseFrame,
    RigidBodyPose,
    encode_pose_frame,
    load_marker_template,
)
from .analytics import count_stops

TRACE_TOPICS = ("pose", "detection", "command")
LOG_TOPICS = ("detection", "zone", "nav", "display", "status")
DEFAULT_RATE_HZ = 120.0
DIAL_ZONE_NAME = "dial"


class ConfigError(ValueError):
    pass


class TraceParseError(ValueError):
    pass


class ScriptError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RuntimeConfig:
    """Resolved session configuration; all file contents already loaded."""

    workspace: Workspace
    library: tuple[Recipe, ...]
    template: MarkerTemplate
    adapter: object
    detent_rad: float = DEFAULT_DETENT_RAD
    jitter_floor_rad: float = DEFAULT_JITTER_FLOOR_RAD
    direction_sign: int = 1
    tracker_port: int = 9901
    event_host: str = "127.0.0.1"
    event_port: int = 9902
    ui_port: int = 9903
    display_every_frame: bool = False
    base_dir: str = "."

    def __post_init__(self):
        if self.direction_sign not in (-1, 1):
            raise ConfigError("direction_sign must be +1 or -1")
        if not (0 < self.detent_rad <= math.pi):
            raise ConfigError("detent angle must be in (0, pi]")
        if not (0 <= self.jitter_floor_rad < self.detent_rad):
            raise ConfigError("jitter floor must be below the detent angle")
        for name in ("tracker_port", "event_port", "ui_port"):
            port = getattr(self, name)
            if not (0 <= port <= 65535):
                raise ConfigError(f"{name} out of range")


def load_config(path) -> RuntimeConfig:
    """Read a config file; relative paths resolve against its directory."""
    try:
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")

    base = os.path.dirname(os.path.abspath(path))

    def resolve(name):
        p = raw.get(name)
        if not isinstance(p, str) or not p:
            raise ConfigError(f"config field {name!r} must be a file path")
        return p if os.path.isabs(p) else os.path.join(base, p)

    try:
        workspace = load_workspace(resolve("workspace"))
        library = tuple(load_recipe_library(resolve("recipes")))
        template = load_marker_template(resolve("rbi_template"))
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"config references unusable file: {exc}") from exc

    adapter_cfg = raw.get("adapter", {"kind": "mock", "script": None})
    if not isinstance(adapter_cfg, dict) or "kind" not in adapter_cfg:
        raise ConfigError("adapter must be an object with a 'kind'")
    if adapter_cfg["kind"] == "mock":
        script = adapter_cfg.get("script")
        if script is None:
            adapter = MockVisionAdapter({})
        else:
            script_path = script if os.path.isabs(script) else os.path.join(base, script)
            try:
                adapter = MockVisionAdapter.from_file(script_path)
            except Exception as exc:
                raise ConfigError(f"cannot load adapter script: {exc}") from exc
    elif adapter_cfg["kind"] == "live":
        adapter = LiveVisionAdapter()
    else:
        raise ConfigError(f"unknown adapter kind {adapter_cfg['kind']!r}")

    dial_cfg = raw.get("dial", {})
    if not isinstance(dial_cfg, dict):
        raise ConfigError("dial must be an object")
    net_cfg = raw.get("network", {})
    if not isinstance(net_cfg, dict):
        raise ConfigError("network must be an object")

    try:
        return RuntimeConfig(
            workspace=workspace,
            library=library,
            template=template,
            adapter=adapter,
            detent_rad=math.radians(float(dial_cfg.get("detent_deg", 30.0))),
            jitter_floor_rad=math.radians(float(dial_cfg.get("jitter_floor_deg", 0.5))),
            direction_sign=int(dial_cfg.get("direction_sign", 1)),
            tracker_port=int(net_cfg.get("tracker_port", 9901)),
            event_host=str(net_cfg.get("event_host", "127.0.0.1")),
            event_port=int(net_cfg.get("event_port", 9902)),
            ui_port=int(net_cfg.get("ui_port", 9903)),
            display_every_frame=bool(raw.get("display_every_frame", False)),
            base_dir=base,
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad config value: {exc}") from exc


# ---------------------------------------------------------------------------
# Trace files
# ---------------------------------------------------------------------------


def validate_trace_record(env: EventEnvelope):
    """Shape-check one input record; raises TraceParseError."""
    if env.topic not in TRACE_TOPICS:
        raise TraceParseError(f"record topic {env.topic!r} is not a trace input")
    p = env.payload
    if not isinstance(p, dict):
        raise TraceParseError("record payload must be an object")
    if env.topic == "pose":
        datagram = p.get("datagram")
        if not isinstance(datagram, str):
            raise TraceParseError("pose record needs a hex 'datagram'")
        try:
            bytes.fromhex(datagram)
        except ValueError as exc:
            raise TraceParseError("pose datagram is not valid hex") from exc
    elif env.topic == "detection":
        if not isinstance(p.get("image_ref"), str):
            raise TraceParseError("detection record needs an 'image_ref'")
    else:
        if not isinstance(p.get("action"), str):
            raise TraceParseError("command record needs an 'action'")


def read_trace(path) -> list[EventEnvelope]:
    """Load and validate a trace; any undecodable frame is a hard error."""
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as exc:
        raise TraceParseError(f"cannot read trace: {exc}") from exc
    errors: list = []
    try:
        records = list(iter_frames(data, errors=errors))
    except MalformedEvent as exc:
        raise TraceParseError(str(exc)) from exc
    if errors:
        raise TraceParseError(f"undecodable frame: {errors[0]}")
    last_seq = -1
    last_ts = -math.inf
    for env in records:
        validate_trace_record(env)
        if env.seq <= last_seq:
            raise TraceParseError(f"record seq {env.seq} not increasing")
        if env.timestamp < last_ts:
            raise TraceParseError(f"record timestamp {env.timestamp} decreases")
        last_seq, last_ts = env.seq, env.timestamp
    return records


def write_trace(path, records):
    for env in records:
        validate_trace_record(env)
    write_frames(path, records)


# ---------------------------------------------------------------------------
# The session engine
# ---------------------------------------------------------------------------


class SessionEngine:
    """Folds input records into session state and emits derived events.

    Emitted envelopes go to the bus; those on LOG_TOPICS are also appended
    to ``log`` in order, which is the replayable output of a session. The
    optional ``sink`` callable sees every emitted envelope (live mode hooks
    the UDP publisher and UI channel there).
    """

    def __init__(self, config: RuntimeConfig, sink=None):
        self.config = config
        self.sink = sink
        self.bus = EventBus()
        self.registry = AgentRegistry()
        self.membership = ZoneMembership()
        self.filter = SequenceFilter()
        self.log: list[EventEnvelope] = []
        self.session = None
        self.last_detection = None
        rbi = self.registry.register("rbi", config.template.name)
        self.rbi_address = rbi.address
        for zone_name in config.workspace.zones:
            self.registry.register("zone", zone_name)
        self.registry.register("display", "projector")
        self.dial = DialState(
            detent_angle=config.detent_rad,
            direction_sign=config.direction_sign,
            jitter_floor=config.jitter_floor_rad,
            source=self.rbi_address,
        )

    # -- emission ----------------------------------------------------------

    def _emit(self, topic: str, timestamp: float, payload) -> EventEnvelope:
        env = self.bus.emit(topic, timestamp, payload)
        if topic in LOG_TOPICS:
            self.log.append(env)
        if self.sink is not None:
            self.sink(env)
        return env

    def _recipe(self) -> Recipe:
        return next(r for r in self.config.library if r.id == self.session.recipe_id)

    def _display_snapshot_payload(self) -> dict:
        if self.session is None:
            outline = ()
            dial_poly = self.config.workspace.zones.get(DIAL_ZONE_NAME)
            if dial_poly is not None:
                outline = tuple(
                    table_to_projector(self.config.workspace, (float(x), float(y))) for x, y in dial_poly
                )
            return {
                "recipe_id": None,
                "title": "",
                "boxes": [],
                "bubbles": [],
                "detail": "",
                "current_step": -1,
                "step_count": 0,
                "dial_zone_px": [[float(x), float(y)] for x, y in outline],
            }
        model = session_snapshot(self.session, self.config.library, self.config.workspace)
        return display_payload(model)

    def _emit_display(self, timestamp: float):
        self._emit("display", timestamp, self._display_snapshot_payload())

    # -- input handlers ----------------------------------------------------

    def handle_pose_datagram(self, data: bytes):
        """One tracker datagram: dedupe, gate by zone, integrate the dial."""
        frame = self.filter.feed_datagram(data)
        if frame is None:
            return
        self.handle_pose_frame(frame)

    def handle_pose_frame(self, frame: PoseFrame):
        for pose in frame.poses:
            if pose.body_id != self.config.template.body_id:
                continue
            position_mm = (pose.position[0] * 1000.0, pose.position[1] * 1000.0)
            zone_events = self.membership.update(
                self.config.workspace, self.rbi_address, position_mm, pose.timestamp
            )
            for ze in zone_events:
                self._emit(
                    "zone",
                    ze.timestamp,
                    {"agent": ze.address, "zone": ze.zone, "transition": ze.transition},
                )
            in_zone = self.membership.is_inside(self.rbi_address, DIAL_ZONE_NAME)
            self.dial, nav_events = dial_update(self.dial, pose, in_zone)
            for ev in nav_events:
                self._emit("nav", ev.timestamp, {"direction": ev.direction, "source": ev.source})
                if self.session is not None:
                    self.session = apply_nav(self.session, self._recipe(), ev)
                    self._emit_display(ev.timestamp)
            if self.config.display_every_frame and not nav_events:
                self._emit_display(pose.timestamp)

    def handle_image_ref(self, timestamp: float, image_ref: str):
        """Run the vision adapter on a referenced frame and (re)match."""
        img = None
        path = image_ref if os.path.isabs(image_ref) else os.path.join(self.config.base_dir, image_ref)
        if os.path.isfile(path):
            img = read_ppm(path)
        try:
            result = detect_ingredients(img, self.config.adapter, image_ref=image_ref)
        except (AdapterRefusal, AdapterTimeout) as exc:
            self._emit(
                "status",
                timestamp,
                {"condition": "detection-degraded", "reason": str(exc), "image_ref": image_ref},
            )
            return
        self.last_detection = result
        self._emit(
            "detection",
            timestamp,
            {
                "image_ref": image_ref,
                "labels": [[label, conf] for label, conf in result.labels],
                "model": result.model_id,
            },
        )
        labels_in_order = [label for label, _ in result.labels]
        if self.session is None:
            match = match_recipe(result.label_set(), self.config.library)
            if match is None:
                self._emit(
                    "status",
                    timestamp,
                    {"condition": "unmatched", "labels": labels_in_order},
                )
                return
            recipe = next(r for r in self.config.library if r.id == match.recipe_id)
            for label in labels_in_order:
                self.registry.register("ingredient", label)
            self.session = new_session(recipe, labels_in_order, timestamp)
        else:
            # The first match locks the recipe; later frames only refresh boxes.
            self.session = replace(self.session, detected=tuple(labels_in_order))
        self._emit_display(timestamp)

    def handle_command(self, timestamp: float, payload: dict):
        """UI/operator commands; malformed ones degrade to a status event."""
        action = payload.get("action") if isinstance(payload, dict) else None
        if action == "set-step" and self.session is not None:
            try:
                step = int(payload["step"])
            except (KeyError, TypeError, ValueError):
                self._emit("status", timestamp, {"condition": "bad-command", "action": "set-step"})
                return
            recipe = self._recipe()
            step = min(max(step, 0), len(recipe.steps) - 1)
            self.session = replace(
                self.session,
                current_step=step,
                log=self.session.log + ((timestamp, "command:set-step"),),
            )
            self._emit_display(timestamp)
        elif action == "reset-session":
            self.session = None
            self._emit("status", timestamp, {"condition": "session-reset"})
            self._emit_display(timestamp)
        elif action == "detect" and isinstance(payload.get("image_ref"), str):
            self.handle_image_ref(timestamp, payload["image_ref"])
        else:
            self._emit("status", timestamp, {"condition": "unknown-command"})

    def handle_record(self, env: EventEnvelope):
        if env.topic == "pose":
            self.handle_pose_datagram(bytes.fromhex(env.payload["datagram"]))
        elif env.topic == "detection":
            self.handle_image_ref(env.timestamp, env.payload["image_ref"])
        else:
            self.handle_command(env.timestamp, env.payload)


# ---------------------------------------------------------------------------
# Replay
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReplaySummary:
    trace_records: int
    detected: tuple[str, ...]
    recipe_id: str | None
    final_step: int | None
    duration_s: float
    nav_next: int
    nav_prev: int
    stops: int
    dropped_stale: int
    dropped_malformed: int

    def as_dict(self) -> dict:
        return {
            "trace_records": self.trace_records,
            "detected": list(self.detected),
            "recipe_id": self.recipe_id,
            "final_step": self.final_step,
            "duration_s": self.duration_s,
            "nav_next": self.nav_next,
            "nav_prev": self.nav_prev,
            "stops": self.stops,
            "dropped_stale": self.dropped_stale,
            "dropped_malformed": self.dropped_malformed,
        }


def log_to_bytes(log) -> bytes:
    """Event log serialization: one canonical envelope per line."""
    return b"".join(encode_event(env) + b"\n" for env in log)


def run_replay(config: RuntimeConfig, records) -> tuple[SessionEngine, ReplaySummary]:
    """Fold a trace through the engine under virtual time.

    ``records`` is a path or an already-loaded record list. Deterministic:
    the same trace and config produce a byte-identical event log.
    """
    if isinstance(records, (str, os.PathLike)):
        records = read_trace(records)
    engine = SessionEngine(config)
    for env in records:
        engine.handle_record(env)
    nav_next = sum(1 for e in engine.log if e.topic == "nav" and e.payload["direction"] == "next")
    nav_prev = sum(1 for e in engine.log if e.topic == "nav" and e.payload["direction"] == "prev")
    duration = records[-1].timestamp - records[0].timestamp if records else 0.0
    session = engine.session
    summary = ReplaySummary(
        trace_records=len(records),
        detected=tuple(label for label, _ in engine.last_detection.labels) if engine.last_detection else (),
        recipe_id=session.recipe_id if session else None,
        final_step=session.current_step if session else None,
        duration_s=duration,
        nav_next=nav_next,
        nav_prev=nav_prev,
        stops=count_stops(session.log) if session else 0,
        dropped_stale=engine.filter.dropped_stale,
        dropped_malformed=engine.filter.dropped_malformed,
    )
    return engine, summary


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------


@dataclass
class _Segment:
    t0: float
    t1: float
    amount: tuple  # target position (m) for moves, delta yaw (rad) for turns


def _validate_script(script: dict):
    if not isinstance(script, dict):
        raise ScriptError("script root must be an object")
    actions = script.get("actions", [])
    if not isinstance(actions, list):
        raise ScriptError("'actions' must be a list")
    for a in actions:
        if not isinstance(a, dict) or not isinstance(a.get("action"), str):
            raise ScriptError("each action must be an object with an 'action'")
        t = a.get("t")
        if not isinstance(t, (int, float)) or not math.isfinite(t) or t < 0:
            raise ScriptError("each action needs a finite t >= 0")
        kind = a["action"]
        if kind == "place-ingredients":
            if not isinstance(a.get("image_ref"), str):
                raise ScriptError("place-ingredients needs an 'image_ref'")
        elif kind == "move-rbi-to":
            for key in ("x_mm", "y_mm"):
                if not isinstance(a.get(key), (int, float)):
                    raise ScriptError(f"move-rbi-to needs numeric {key!r}")
        elif kind == "rotate-rbi-by":
            if not isinstance(a.get("degrees"), (int, float)):
                raise ScriptError("rotate-rbi-by needs numeric 'degrees'")
        elif kind == "command":
            if not isinstance(a.get("payload"), dict):
                raise ScriptError("command needs an object 'payload'")
        else:
            raise ScriptError(f"unknown action {kind!r}")
        over = a.get("over_s", 0.0)
        if not isinstance(over, (int, float)) or over < 0 or not math.isfinite(over):
            raise ScriptError("'over_s' must be a finite non-negative number")


def _overlap_check(segments: list[_Segment], kind: str):
    segments = sorted(segments, key=lambda s: s.t0)
    for a, b in zip(segments, segments[1:]):
        if b.t0 < a.t1:
            raise ScriptError(f"overlapping {kind} actions at t={b.t0}")


def run_simulate(script: dict, seed: int, body_id: int | None = None) -> list[EventEnvelope]:
    """Synthesize a trace from a motion script.

    The rigid body starts at ``start_mm`` and moves/rotates along linear
    ramps at ``rate_hz``. Position noise (``noise_sigma_m``) comes from a
    generator seeded with ``seed``, so identical inputs give identical trace
    bytes. Returns validated trace records ready for write_trace.
    """
    _validate_script(script)
    rate = float(script.get("rate_hz", DEFAULT_RATE_HZ))
    if not (1.0 <= rate <= 1000.0):
        raise ScriptError("rate_hz must be within [1, 1000]")
    sigma = float(script.get("noise_sigma_m", 0.0))
    if sigma < 0 or not math.isfinite(sigma):
        raise ScriptError("noise_sigma_m must be finite and non-negative")
    start = script.get("start_mm", [200.0, 350.0])
    if not (isinstance(start, list) and len(start) == 2):
        raise ScriptError("start_mm must be [x, y]")
    z_m = float(script.get("height_mm", 20.0)) / 1000.0
    if body_id is None:
        body_id = int(script.get("body_id", 7))

    moves: list[_Segment] = []
    turns: list[_Segment] = []
    frames: list[tuple[float, dict]] = []  # (t, trace payload) for non-pose records
    end_t = float(script.get("duration_s", 0.0))
    for a in script.get("actions", []):
        t = float(a["t"])
        over = float(a.get("over_s", 0.0))
        kind = a["action"]
        if kind == "move-rbi-to":
            target = (float(a["x_mm"]) / 1000.0, float(a["y_mm"]) / 1000.0)
            moves.append(_Segment(t, t + over, target))
        elif kind == "rotate-rbi-by":
            turns.append(_Segment(t, t + over, (math.radians(float(a["degrees"])),)))
        elif kind == "place-ingredients":
            frames.append((t, {"topic": "detection", "payload": {"image_ref": a["image_ref"]}}))
        else:
            frames.append((t, {"topic": "command", "payload": dict(a["payload"])}))
        end_t = max(end_t, t + over)
    _overlap_check(moves, "move")
    _overlap_check(turns, "rotate")
    end_t = max(end_t, 1.0)

    moves.sort(key=lambda s: s.t0)
    turns.sort(key=lambda s: s.t0)

    def position_at(t: float) -> tuple[float, float]:
        x, y = float(start[0]) / 1000.0, float(start[1]) / 1000.0
        for seg in moves:
            tx, ty = seg.amount
            if t >= seg.t1:
                x, y = tx, ty
            elif t > seg.t0:
                u = (t - seg.t0) / (seg.t1 - seg.t0)
                x, y = x + (tx - x) * u, y + (ty - y) * u
                break
            else:
                break
        return x, y

    def yaw_at(t: float) -> float:
        yaw = 0.0
        for seg in turns:
            (delta,) = seg.amount
            if t >= seg.t1:
                yaw += delta
            elif t > seg.t0:
                if seg.t1 > seg.t0:
                    yaw += delta * (t - seg.t0) / (seg.t1 - seg.t0)
                break
            else:
                break
        return yaw

    rng = np.random.default_rng(seed)
    tick_count = int(math.ceil(end_t * rate)) + 1
    pose_records: list[tuple[float, dict]] = []
    for k in range(tick_count):
        t = k / rate
        x, y = position_at(t)
        noise = rng.normal(0.0, sigma, 3) if sigma > 0 else (0.0, 0.0, 0.0)
        pose = RigidBodyPose(
            body_id=body_id,
            timestamp=t,
            position=(x + noise[0], y + noise[1], z_m + noise[2]),
            orientation=yaw_quat(yaw_at(t)),
        )
        datagram = encode_pose_frame(PoseFrame(sequence=k + 1, poses=(pose,)))
        pose_records.append((t, {"topic": "pose", "payload": {"datagram": datagram.hex()}}))

    # Poses sort before same-instant actions; actions keep script order.
    merged = sorted(
        [(t, 0, i, r) for i, (t, r) in enumerate(pose_records)]
        + [(t, 1, i, r) for i, (t, r) in enumerate(frames)],
        key=lambda item: (item[0], item[1], item[2]),
    )
    records = [
        EventEnvelope(seq=i, timestamp=t, topic=r["topic"], payload=r["payload"])
        for i, (t, _, _, r) in enumerate(merged)
    ]
    for env in records:
        validate_trace_record(env)
    return records


def load_script(path) -> dict:
    try:
        with open(path, encoding="utf-8") as f:
            script = json.load(f)
    except OSError as exc:
        raise ScriptError(f"cannot read script: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScriptError(f"script is not valid JSON: {exc}") from exc
    _validate_script(script if isinstance(script, dict) else None)
    return script


# ---------------------------------------------------------------------------
# Live mode
# ---------------------------------------------------------------------------


@dataclass
class LiveStats:
    frames: int = 0
    latencies_s: list = field(default_factory=list)

    def percentile_ms(self, q: float) -> float:
        if not self.latencies_s:
            return 0.0
        return float(np.percentile(np.asarray(self.latencies_s), q) * 1000.0)


def run_live(config: RuntimeConfig, duration_s: float | None = None, stop=None) -> LiveStats:
    """Serve a live session until ``duration_s`` elapses or ``stop`` is set.

    Input arrives as tracker datagrams on ``tracker_port``; derived events
    go to the UDP event peer and to every connected UI client. Per-datagram
    handling latency (socket read return to last fan-out write) is recorded
    for the latency report.
    """
    sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    sock.bind(("127.0.0.1", config.tracker_port))
    sock.settimeout(0.05)
    ui = UiChannelServer(port=config.ui_port)
    ui.start()
    publisher = UdpEventPublisher(config.event_host, config.event_port)

    def sink(env: EventEnvelope):
        publisher.send(env)
        ui.broadcast(env)

    engine = SessionEngine(config, sink=sink)
    stats = LiveStats()
    started = time.monotonic()
    try:
        while True:
            if duration_s is not None and time.monotonic() - started >= duration_s:
                break
            if stop is not None and stop.is_set():
                break
            cmd = ui.poll_command()
            if cmd is not None:
                engine.handle_command(cmd.timestamp, cmd.payload)
            try:
                data, _addr = sock.recvfrom(65535)
            except socket.timeout:
                continue
            t0 = time.perf_counter()
            engine.handle_pose_datagram(data)
            stats.latencies_s.append(time.perf_counter() - t0)
            stats.frames += 1
    finally:
        sock.close()
        publisher.close()
        ui.stop()
    return stats
