"""Command line interface.

    routesim sweep <config.json> [--workers N] [--out-dir DIR]
    routesim run <scenario.json> --seed N [--out rec.json] [--log upd.jsonl]
    routesim summarize <records.csv> [--out summary.csv] [--plot-data plot.csv]
    routesim make-scenario --family clique --size 8 --penetration 50 --seed 7
    routesim serve [--host H] [--port P]

Exit codes: 0 success, 1 usage/config error, 2 hard invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .experiment import (Cell, InvariantViolation, SweepConfig,
                         build_cell_scenario, plot_data_csv, records_from_csv,
                         records_to_csv, run_failover, run_sweep, summaries_to_csv,
                         summarize)
from .metrics import dump_update_log
from .network import RunParams
from .topology import ConfigError, FailoverScenario

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INVARIANT = 2


def _cmd_sweep(args) -> int:
    config = SweepConfig.from_json(Path(args.config).read_text())
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        records = run_sweep(config, workers=args.workers)
    except InvariantViolation as exc:
        print(f"invariant violation, sweep aborted: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    summaries = summarize(records, expected_runs=config.runs_per_cell)
    (out_dir / "records.csv").write_text(records_to_csv(records))
    (out_dir / "records.jsonl").write_text(
        "".join(r.to_json() + "\n" for r in records))
    (out_dir / "summary.csv").write_text(summaries_to_csv(summaries))
    (out_dir / "plot_data.csv").write_text(plot_data_csv(summaries))
    print(f"{len(records)} runs, {len(summaries)} cells -> {out_dir}")
    return EXIT_OK


def _cmd_run(args) -> int:
    body = json.loads(Path(args.scenario).read_text())
    scenario = FailoverScenario.from_dict(body["scenario"])
    params = RunParams(**body.get("params", {}))
    try:
        out = run_failover(scenario, params, seed=args.seed,
                           scenario_id=body.get("scenario_id", Path(args.scenario).stem),
                           record_trace=args.trace is not None)
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    record = out.record
    print(json.dumps(record.to_dict(), sort_keys=True, indent=2))
    if args.out:
        Path(args.out).write_text(record.to_json() + "\n")
    if args.log:
        Path(args.log).write_text(dump_update_log(out.net))
    if args.trace:
        Path(args.trace).write_text(
            "".join(f"{t} {kind}\n" for t, kind in out.sim.trace))
    return EXIT_OK


def _cmd_summarize(args) -> int:
    records = records_from_csv(Path(args.records).read_text())
    summaries = summarize(records, expected_runs=args.expected_runs)
    text = summaries_to_csv(summaries)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text, end="")
    if args.plot_data:
        Path(args.plot_data).write_text(plot_data_csv(summaries))
    return EXIT_OK


def _cmd_make_scenario(args) -> int:
    config = SweepConfig()
    cell = Cell(args.family, args.size, args.penetration, args.mrai)
    scenario, params, seed = build_cell_scenario(config, cell, args.run_index)
    body = {
        "scenario_id": cell.cell_id(),
        "scenario": scenario.to_dict(),
        "params": params.to_dict(),
        "seed": seed,
    }
    text = json.dumps(body, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out} (seed {seed})")
    else:
        print(text)
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .live import create_app
    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="routesim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run the full parameter sweep")
    p.add_argument("config")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out-dir", default="sweep-out")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("run", help="run one fail-over scenario")
    p.add_argument("scenario")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.add_argument("--log")
    p.add_argument("--trace")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("summarize", help="five-number summaries from records")
    p.add_argument("records")
    p.add_argument("--out")
    p.add_argument("--plot-data")
    p.add_argument("--expected-runs", type=int, default=None)
    p.set_defaults(fn=_cmd_summarize)

    p = sub.add_parser("make-scenario", help="emit a scenario file for `run`")
    p.add_argument("--family", default="clique")
    p.add_argument("--size", type=int, default=8)
    p.add_argument("--penetration", type=int, default=50)
    p.add_argument("--mrai", type=float, default=30.0)
    p.add_argument("--run-index", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_make_scenario)

    p = sub.add_parser("serve", help="start the live-bridge HTTP/WebSocket service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(fn=_cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"file not found: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
