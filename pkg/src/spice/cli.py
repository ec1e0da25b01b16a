"""Command-line front end: run, replay, simulate, analyze.

Exit codes: 0 on success, 2 for configuration problems, 3 for unusable
trace/script/study input files.
"""

import argparse
import json
import sys

from .analytics import load_trials, render_report_text, report_payload, run_metric_tests, summarize
from .runtime import (
    ConfigError,
    ScriptError,
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

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INPUT = 3


def _cmd_run(args) -> int:
    config = load_config(args.config)
    stats = run_live(config, duration_s=args.duration)
    print(f"frames handled: {stats.frames}")
    if stats.latencies_s:
        print(f"latency p50: {stats.percentile_ms(50):.3f} ms")
        print(f"latency p99: {stats.percentile_ms(99):.3f} ms")
    return EXIT_OK


def _cmd_replay(args) -> int:
    config = load_config(args.config)
    records = read_trace(args.trace)
    engine, summary = run_replay(config, records)
    log_bytes = log_to_bytes(engine.log)
    if args.golden:
        with open(args.golden, "wb") as f:
            f.write(log_bytes)
        print(f"event log: {args.golden} ({len(engine.log)} events)")
    else:
        sys.stdout.write(log_bytes.decode("utf-8"))
    for key, value in summary.as_dict().items():
        print(f"{key}: {value}")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    script = load_script(args.script)
    records = run_simulate(script, seed=args.seed)
    write_trace(args.out, records)
    print(f"trace: {args.out} ({len(records)} records)")
    return EXIT_OK


def _cmd_analyze(args) -> int:
    try:
        records = load_trials(args.csv)
    except OSError as exc:
        raise TraceParseError(f"cannot read study CSV: {exc}") from exc
    except ValueError as exc:
        raise TraceParseError(f"unusable study CSV: {exc}") from exc
    table = summarize(records)
    reports = run_metric_tests(records)
    if args.json:
        print(json.dumps(report_payload(table, reports), indent=2, sort_keys=True))
    else:
        print(render_report_text(table, reports))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spice", description="Cooking-guidance session tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="serve a live session from tracker datagrams")
    p.add_argument("--config", required=True)
    p.add_argument("--duration", type=float, default=None, help="stop after this many seconds")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("replay", help="re-run a recorded trace deterministically")
    p.add_argument("--config", required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--golden", default=None, help="write the event log to this file")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("simulate", help="synthesize a trace from a motion script")
    p.add_argument("--script", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("analyze", help="study statistics from a trials CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=_cmd_analyze)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TraceParseError, ScriptError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
