"""Trace format, simulate/replay determinism, and the session fold."""

import dataclasses
import json
import math
import os
import random
import socket
import threading
import time

import pytest

from spice.bridge import EventEnvelope, decode_event, write_frames
from spice.detection import MockVisionAdapter
from spice.runtime import (
    ConfigError,
    ScriptError,
    SessionEngine,
    TraceParseError,
    load_config,
    load_script,
    log_to_bytes,
    read_trace,
    run_live,
    run_replay,
    run_simulate,
    write_trace,
)
from spice.tracking import decode_pose_datagram

FIXTURES = "fixtures"
CONFIG = f"{FIXTURES}/config.json"


def zone_center_mm():
    # Center of the dial zone in the bundled workspace.
    return 1240.0, 140.0


def make_script(rotations_deg, rate_hz=60.0, enter_zone=True, speed_deg_s=180.0):
    """Move into the dial zone, then apply each rotation as a linear ramp."""
    x, y = zone_center_mm()
    actions = []
    t = 0.2
    if enter_zone:
        actions.append({"t": t, "action": "move-rbi-to", "x_mm": x, "y_mm": y, "over_s": 0.3})
        t += 0.5
    for theta in rotations_deg:
        over = max(abs(theta) / speed_deg_s, 2.0 / rate_hz)
        actions.append({"t": t, "action": "rotate-rbi-by", "degrees": theta, "over_s": over})
        t += over + 0.1
    return {"duration_s": t + 0.1, "rate_hz": rate_hz, "start_mm": [200.0, 350.0], "actions": actions}


def nav_directions(engine):
    return [e.payload["direction"] for e in engine.log if e.topic == "nav"]


def expected_directions(rotations_deg, detent_deg=30.0):
    """Continuous-limit detent counter: the analytic model for a script."""
    acc = 0.0
    out = []
    for theta in rotations_deg:
        acc += theta
        while abs(acc) >= detent_deg - 1e-9:
            out.append("next" if acc > 0 else "prev")
            acc -= math.copysign(detent_deg, acc)
    return out


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


def test_config_loads_bundled_fixture():
    config = load_config(CONFIG)
    assert config.detent_rad == pytest.approx(math.pi / 6)
    assert config.jitter_floor_rad == pytest.approx(math.radians(0.5))
    assert config.direction_sign == 1
    assert config.template.body_id == 7
    assert "dial" in config.workspace.zones
    assert any(r.id == "guacamole" for r in config.library)


def test_config_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.json")


def test_config_invalid_json_is_config_error(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(p)


def test_config_unknown_adapter_kind_rejected(tmp_path):
    raw = json.load(open(CONFIG))
    raw["adapter"] = {"kind": "imaginary"}
    for key in ("workspace", "recipes", "rbi_template"):
        raw[key] = os.path.abspath(os.path.join(FIXTURES, raw[key]))
    p = tmp_path / "c.json"
    p.write_text(json.dumps(raw))
    with pytest.raises(ConfigError):
        load_config(p)


def test_config_jitter_floor_must_stay_below_detent():
    config = load_config(CONFIG)
    with pytest.raises(ConfigError):
        dataclasses.replace(config, jitter_floor_rad=config.detent_rad)


# ---------------------------------------------------------------------------
# Trace files
# ---------------------------------------------------------------------------


def test_trace_round_trip_preserves_records(tmp_path):
    records = run_simulate(make_script([35.0]), seed=3)
    path = tmp_path / "t.spicetrace"
    write_trace(path, records)
    assert read_trace(path) == records


def test_trace_rejects_corrupt_frame(tmp_path):
    records = run_simulate(make_script([]), seed=0)
    path = tmp_path / "t.spicetrace"
    write_trace(path, records)
    data = bytearray(path.read_bytes())
    data[7] ^= 0xFF  # inside the first record body
    path.write_bytes(bytes(data))
    with pytest.raises(TraceParseError):
        read_trace(path)


def test_trace_rejects_truncated_tail(tmp_path):
    records = run_simulate(make_script([]), seed=0)
    path = tmp_path / "t.spicetrace"
    write_trace(path, records)
    path.write_bytes(path.read_bytes()[:-10])
    with pytest.raises(TraceParseError):
        read_trace(path)


def test_trace_rejects_decreasing_timestamps(tmp_path):
    a = EventEnvelope(seq=0, timestamp=1.0, topic="detection", payload={"image_ref": "x"})
    b = EventEnvelope(seq=1, timestamp=0.5, topic="detection", payload={"image_ref": "y"})
    path = tmp_path / "t.spicetrace"
    write_frames(path, [a, b])
    with pytest.raises(TraceParseError):
        read_trace(path)


def test_trace_rejects_stale_sequence_numbers(tmp_path):
    a = EventEnvelope(seq=5, timestamp=1.0, topic="detection", payload={"image_ref": "x"})
    b = EventEnvelope(seq=5, timestamp=2.0, topic="detection", payload={"image_ref": "y"})
    path = tmp_path / "t.spicetrace"
    write_frames(path, [a, b])
    with pytest.raises(TraceParseError):
        read_trace(path)


def test_trace_rejects_foreign_topic(tmp_path):
    env = EventEnvelope(seq=0, timestamp=0.0, topic="display", payload={})
    path = tmp_path / "t.spicetrace"
    write_frames(path, [env])
    with pytest.raises(TraceParseError):
        read_trace(path)


def test_trace_rejects_bad_pose_hex(tmp_path):
    env = EventEnvelope(seq=0, timestamp=0.0, topic="pose", payload={"datagram": "zz"})
    path = tmp_path / "t.spicetrace"
    write_frames(path, [env])
    with pytest.raises(TraceParseError):
        read_trace(path)


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------


def test_simulate_is_deterministic_per_seed():
    script = make_script([95.0, -65.0])
    script["noise_sigma_m"] = 0.0005
    a = run_simulate(script, seed=11)
    b = run_simulate(script, seed=11)
    c = run_simulate(script, seed=12)
    assert a == b
    assert a != c


def test_simulate_pose_grid_and_sequences():
    records = run_simulate({"duration_s": 1.0, "rate_hz": 120.0, "actions": []}, seed=0)
    poses = [r for r in records if r.topic == "pose"]
    assert len(poses) == 121  # inclusive of both endpoints
    sequences = []
    for i, r in enumerate(poses):
        assert r.timestamp == pytest.approx(i / 120.0)
        frame = decode_pose_datagram(bytes.fromhex(r.payload["datagram"]))
        sequences.append(frame.sequence)
    assert sequences == sorted(set(sequences))


def test_simulate_rejects_malformed_scripts():
    with pytest.raises(ScriptError):
        run_simulate({"actions": [{"action": "fly", "t": 0.0}]}, seed=0)
    with pytest.raises(ScriptError):
        run_simulate({"actions": [{"action": "move-rbi-to", "t": -1.0, "x_mm": 0, "y_mm": 0}]}, seed=0)
    with pytest.raises(ScriptError):
        run_simulate({"actions": [{"action": "rotate-rbi-by", "t": 0.0}]}, seed=0)
    with pytest.raises(ScriptError):
        run_simulate({"rate_hz": 0.0, "actions": []}, seed=0)
    overlapping = {
        "actions": [
            {"t": 0.0, "action": "rotate-rbi-by", "degrees": 40, "over_s": 1.0},
            {"t": 0.5, "action": "rotate-rbi-by", "degrees": 40, "over_s": 1.0},
        ]
    }
    with pytest.raises(ScriptError):
        run_simulate(overlapping, seed=0)


def test_load_script_errors(tmp_path):
    with pytest.raises(ScriptError):
        load_script(tmp_path / "absent.json")
    p = tmp_path / "s.json"
    p.write_text("[1, 2]")
    with pytest.raises(ScriptError):
        load_script(p)


# ---------------------------------------------------------------------------
# Replay: dial navigation against the analytic model
# ---------------------------------------------------------------------------


def test_single_turn_in_zone_matches_spec_example():
    # +90 degrees at a 30-degree detent is exactly three next events.
    config = load_config(CONFIG)
    script = make_script([90.0], rate_hz=120.0, speed_deg_s=45.0)
    engine, summary = run_replay(config, run_simulate(script, seed=0))
    assert nav_directions(engine) == ["next", "next", "next"]
    assert summary.nav_next == 3 and summary.nav_prev == 0


def test_rotation_outside_zone_emits_nothing():
    config = load_config(CONFIG)
    script = make_script([155.0, -95.0], enter_zone=False)
    engine, summary = run_replay(config, run_simulate(script, seed=0))
    assert nav_directions(engine) == []
    assert not any(e.topic == "zone" for e in engine.log)


def test_random_scripts_match_continuous_detent_model():
    # Cumulative residue is kept away from detent boundaries so the
    # continuous model and the 60 Hz sampled pipeline must agree exactly.
    config = load_config(CONFIG)
    rng = random.Random(424242)
    for trial in range(60):
        rotations = []
        frac = 0.0
        for _ in range(rng.randint(1, 3)):
            while True:
                u = rng.uniform(0.1, 0.9)
                n = rng.randint(0, 6)
                sign = rng.choice((-1.0, 1.0))
                new_frac = (frac + sign * u) % 1.0
                if 0.05 <= new_frac <= 0.95:
                    break
            frac = new_frac
            rotations.append(sign * (n + u) * 30.0)
        script = make_script(rotations)
        engine, _ = run_replay(config, run_simulate(script, seed=trial))
        assert nav_directions(engine) == expected_directions(rotations), rotations


def test_replay_of_empty_heartbeat_trace_is_quiet():
    config = load_config(CONFIG)
    engine, summary = run_replay(config, run_simulate({"actions": []}, seed=0))
    assert engine.log == []
    assert summary.recipe_id is None and summary.final_step is None
    assert summary.stops == 0


def test_duplicate_datagrams_are_dropped_not_recounted():
    config = load_config(CONFIG)
    records = run_simulate(make_script([95.0]), seed=5)
    doubled = []
    seq = 0
    for r in records:
        doubled.append(dataclasses.replace(r, seq=seq))
        seq += 1
        if r.topic == "pose":
            doubled.append(dataclasses.replace(r, seq=seq))
            seq += 1
    engine_a, _ = run_replay(config, records)
    engine_b, summary_b = run_replay(config, doubled)
    assert nav_directions(engine_a) == nav_directions(engine_b) == ["next"] * 3
    assert summary_b.dropped_stale == sum(1 for r in records if r.topic == "pose")


# ---------------------------------------------------------------------------
# Replay: full session behavior
# ---------------------------------------------------------------------------


def test_golden_guacamole_replay_is_byte_exact():
    config = load_config(CONFIG)
    engine, summary = run_replay(config, f"{FIXTURES}/guacamole.spicetrace")
    golden = open(f"{FIXTURES}/guacamole_golden.log", "rb").read()
    assert log_to_bytes(engine.log) == golden
    assert summary.detected == ("tomato", "avocado", "lemon", "onion")
    assert summary.recipe_id == "guacamole"
    assert summary.final_step == 4
    assert nav_directions(engine) == ["next"] * 5 + ["prev"] * 2 + ["next"] * 2


def test_golden_log_lines_decode_and_stay_ordered():
    golden = open(f"{FIXTURES}/guacamole_golden.log", "rb").read()
    seqs = []
    for line in golden.splitlines():
        env = decode_event(line)
        seqs.append(env.seq)
    assert seqs == sorted(seqs)


def test_display_snapshots_keep_one_highlighted_bubble():
    config = load_config(CONFIG)
    engine, _ = run_replay(config, f"{FIXTURES}/guacamole.spicetrace")
    displays = [e for e in engine.log if e.topic == "display"]
    assert displays
    for env in displays:
        assert len(env.payload["boxes"]) == 4
        highlighted = [b for b in env.payload["bubbles"] if b[2]]
        assert len(highlighted) == 1
        assert highlighted[0][1] == env.payload["current_step"]


def test_detection_refusal_degrades_with_status_event():
    config = load_config(CONFIG)
    engine = SessionEngine(config)
    engine.handle_image_ref(1.0, "refusal.ppm")
    assert engine.session is None
    kinds = [(e.topic, e.payload.get("condition")) for e in engine.log]
    assert ("status", "detection-degraded") in kinds


def test_detection_without_recipe_match_reports_unmatched():
    config = load_config(CONFIG)
    config = dataclasses.replace(config, adapter=MockVisionAdapter({"x.ppm": "chocolate, marshmallow"}))
    engine = SessionEngine(config)
    engine.handle_image_ref(1.0, "x.ppm")
    assert engine.session is None
    assert any(e.topic == "status" and e.payload["condition"] == "unmatched" for e in engine.log)


def test_commands_set_step_and_reset():
    config = load_config(CONFIG)
    engine = SessionEngine(config)
    engine.handle_image_ref(0.5, "table.ppm")
    assert engine.session is not None
    engine.handle_command(1.0, {"action": "set-step", "step": 99})
    assert engine.session.current_step == 4  # clamped to the last step
    engine.handle_command(1.5, {"action": "set-step", "step": 2})
    assert engine.session.current_step == 2
    engine.handle_command(2.0, {"action": "reset-session"})
    assert engine.session is None
    idle = [e for e in engine.log if e.topic == "display"][-1]
    assert idle.payload["step_count"] == 0
    engine.handle_command(2.5, {"action": "warp"})
    assert engine.log[-1].payload["condition"] == "unknown-command"


def test_detect_command_runs_adapter():
    config = load_config(CONFIG)
    engine = SessionEngine(config)
    engine.handle_command(0.1, {"action": "detect", "image_ref": "table.ppm"})
    assert engine.session is not None
    assert engine.session.recipe_id == "guacamole"


def test_second_detection_refreshes_boxes_but_keeps_recipe():
    config = load_config(CONFIG)
    engine = SessionEngine(config)
    engine.handle_image_ref(0.5, "table.ppm")
    engine.handle_image_ref(1.5, "salad.ppm")
    assert engine.session.recipe_id == "guacamole"
    assert engine.session.detected == ("tomato", "red onion")


# ---------------------------------------------------------------------------
# Live mode
# ---------------------------------------------------------------------------


def free_port() -> int:
    s = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
    s.close()
    return port


def test_live_loop_forwards_nav_events_over_udp():
    config = load_config(CONFIG)
    config = dataclasses.replace(
        config, tracker_port=free_port(), event_port=free_port(), ui_port=0
    )
    peer = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    peer.bind(("127.0.0.1", config.event_port))
    peer.settimeout(5.0)

    records = run_simulate(make_script([95.0], rate_hz=60.0), seed=9)
    datagrams = [bytes.fromhex(r.payload["datagram"]) for r in records if r.topic == "pose"]

    stop = threading.Event()
    stats_box = {}

    def serve():
        stats_box["stats"] = run_live(config, stop=stop)

    worker = threading.Thread(target=serve)
    worker.start()
    try:
        time.sleep(0.3)  # let the socket bind
        out = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        for dg in datagrams:
            out.sendto(dg, ("127.0.0.1", config.tracker_port))
            time.sleep(0.001)
        directions = []
        deadline = time.time() + 5.0
        while len(directions) < 3 and time.time() < deadline:
            env = decode_event(peer.recv(65535))
            if env.topic == "nav":
                directions.append(env.payload["direction"])
    finally:
        stop.set()
        worker.join(timeout=5.0)
        peer.close()
    assert directions == ["next", "next", "next"]
    assert stats_box["stats"].frames > 0
