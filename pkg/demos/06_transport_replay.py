"""Simulate a full session, replay it twice, diff the logs.

The simulator produces a trace of pose datagrams plus a camera-frame
reference; replay folds it into zone, navigation, and display events.
Determinism is the point: both replays must serialize identically.
"""

from pathlib import Path

from spice.runtime import load_config, load_script, log_to_bytes, run_replay, run_simulate

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def main():
    config = load_config(FIXTURES / "config.json")
    script = load_script(FIXTURES / "guacamole_script.json")

    records = run_simulate(script, seed=0)
    poses = sum(1 for r in records if r.topic == "pose")
    print(f"simulated {len(records)} trace records ({poses} pose datagrams at 120 Hz)")

    engine, summary = run_replay(config, records)
    print(f"detected: {', '.join(summary.detected)}")
    print(f"recipe: {summary.recipe_id}, final step {summary.final_step}")
    print(f"navigation: {summary.nav_next} next / {summary.nav_prev} prev, "
          f"stops {summary.stops}, duration {summary.duration_s:.1f} s")

    print("\nevent log head:")
    for env in engine.log[:5]:
        print(f"  seq {env.seq:3d} t={env.timestamp:6.3f} {env.topic}")

    again, _ = run_replay(config, records)
    assert log_to_bytes(engine.log) == log_to_bytes(again.log)
    print(f"\nreplayed twice: {len(engine.log)} events, logs byte-identical")


if __name__ == "__main__":
    main()
