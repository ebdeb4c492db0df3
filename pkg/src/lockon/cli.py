"""Command line interface: run scenarios, compute metrics, serve, measure latency."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .metrics import ConfusionCounts, MetricsError, confusion_metrics, summarize_run
from .runner import LatencyHarnessError, event_log_to_jsonl, latency_harness, parse_jsonl, run
from .scenario import ScenarioError, load_scenario
from .server import MissionStore, TargetAssignment, make_http_server
from .world import Vec3


def _cmd_run(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, seed=args.seed)
    result = run(scenario)
    if args.log:
        Path(args.log).write_text(event_log_to_jsonl(result.event_log), encoding="utf-8")
    if args.out:
        Path(args.out).write_text(json.dumps(result.as_dict(), indent=2) + "\n", encoding="utf-8")
    print(f"scenario {scenario.name} (seed {scenario.seed}): terminated by {result.terminated_by}")
    for outcome in result.report.per_target:
        if outcome.locked:
            print(f"  {outcome.target_id}: locked after {outcome.time_to_lock:.2f} s")
        else:
            print(
                f"  {outcome.target_id}: failed ({outcome.reason}), "
                f"max containment {outcome.max_containment_s:.2f} s"
            )
    return 0


def _cmd_metrics(args: argparse.Namespace) -> int:
    if args.log:
        entries = parse_jsonl(Path(args.log).read_text(encoding="utf-8"))
        report = summarize_run(entries)
        print(json.dumps(report.as_dict(), indent=2))
        return 0
    if args.tp is None or args.fp is None or args.fn is None:
        print("metrics: provide --log FILE or all of --tp --fp --fn", file=sys.stderr)
        return 2
    result = confusion_metrics(ConfusionCounts(tp=args.tp, fp=args.fp, fn=args.fn))
    print(json.dumps(result.as_dict()))
    return 0


def _load_targets_file(path: str) -> list[TargetAssignment]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    targets = []
    for entry in data.get("targets", []):
        position = entry.get("position", entry.get("p0"))
        targets.append(
            TargetAssignment(target_id=str(entry["id"]), position=Vec3.from_any(position))
        )
    return targets


def _cmd_serve(args: argparse.Namespace) -> int:
    targets = _load_targets_file(args.targets) if args.targets else []
    store = MissionStore(targets)
    httpd = make_http_server(store, port=args.port)
    print(f"mission server listening on 127.0.0.1:{httpd.server_address[1]}", flush=True)
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        httpd.server_close()
    return 0


def _cmd_latency(args: argparse.Namespace) -> int:
    report = latency_harness(port=args.port, payload_bytes=args.bytes, n_requests=args.count)
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lockon", description="Deterministic interceptor-UAV mission simulator"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario to completion")
    p_run.add_argument("--scenario", required=True, help="scenario file path or bundled name")
    p_run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p_run.add_argument("--out", default=None, help="write the run report JSON here")
    p_run.add_argument("--log", default=None, help="write the JSONL event log here")
    p_run.set_defaults(func=_cmd_run)

    p_metrics = sub.add_parser("metrics", help="detection metrics or run-log summary")
    p_metrics.add_argument("--tp", type=int, default=None)
    p_metrics.add_argument("--fp", type=int, default=None)
    p_metrics.add_argument("--fn", type=int, default=None)
    p_metrics.add_argument("--log", default=None, help="summarize a JSONL event log")
    p_metrics.set_defaults(func=_cmd_metrics)

    p_serve = sub.add_parser("serve", help="run the mission server on loopback HTTP")
    p_serve.add_argument("--port", type=int, default=8080)
    p_serve.add_argument("--targets", default=None, help="JSON file seeding the target queue")
    p_serve.set_defaults(func=_cmd_serve)

    p_latency = sub.add_parser("latency", help="measure telemetry round-trip latency")
    p_latency.add_argument("--port", type=int, required=True)
    p_latency.add_argument("--bytes", type=int, default=500)
    p_latency.add_argument("--count", type=int, default=1000)
    p_latency.add_argument("--out", default=None)
    p_latency.set_defaults(func=_cmd_latency)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, MetricsError, LatencyHarnessError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
