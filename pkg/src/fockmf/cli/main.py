"""Command line entry point: fockmf {converge,dyson,bounds,transport,report}."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from .emit import EmptyRunError, lookup, render_csv, store, write_outputs
from .runners import RUNNERS, RefusedError
from .scenario import ScenarioError, load_scenario

log = logging.getLogger("fockmf")


def _finite_or_str(x):
    return x if isinstance(x, (int, float)) and math.isfinite(x) else str(x)


def execute(command: str, scenario_path, out_dir, fmt: str = "csv", slice: float | None = None,
            jobs: int = 1) -> dict:
    """Run (or fetch from cache) one command for one scenario and write outputs."""
    s = load_scenario(scenario_path)
    variant = "" if slice is None else f"-slice{slice!r}"
    cached = lookup(s.hash, command, variant)
    if cached is not None:
        csv_text, summary = cached
        summary["cache_hit"] = True
        log.info("cache hit for %s/%s%s", s.hash, command, variant)
    else:
        result = RUNNERS[command](s, slice=slice, jobs=jobs)
        csv_text = render_csv(s.hash, result.rows)
        summary = {
            "scenario": s.name,
            "scenario_hash": s.hash,
            "command": command,
            "slice": slice,
            "rows": len(result.rows),
            "lambda_audit": s.lambda_audit,
            "lambda_limit": s.lambda_limit,
            "q_norm": s.q_norm,
            "T0": _finite_or_str(s.T0),
            "tolerances": s.tolerances,
            **result.facts,
        }
        store(s.hash, command, variant, csv_text, summary)
        summary["cache_hit"] = False
    write_outputs(Path(out_dir), command, csv_text, summary, fmt)
    return summary


def report(out_dir) -> dict:
    """Collect every summary in ``out_dir`` into report.json and a short text table."""
    out_dir = Path(out_dir)
    summaries = {}
    for path in sorted(out_dir.glob("*.summary.json")):
        summaries[path.name.removesuffix(".summary.json")] = json.loads(path.read_text())
    if not summaries:
        raise EmptyRunError(f"nothing to report in {out_dir}")
    (out_dir / "report.json").write_text(json.dumps(summaries, indent=2, sort_keys=True) + "\n")
    return summaries


def _format_summary(summary: dict) -> str:
    keys = ["command", "scenario_hash", "rows", "cache_hit", "lambda_audit", "lambda_limit", "T0",
            "fitted_orders", "violations", "max_residual"]
    return "\n".join(f"  {k}: {summary[k]}" for k in keys if k in summary)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fockmf", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        p = sub.add_parser(name, help=RUNNERS[name].__doc__.splitlines()[0])
        p.add_argument("--scenario", required=True, type=Path)
        p.add_argument("--out", required=True, type=Path)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--slice", type=float, default=None, help="sub-interval length for long times")
        p.add_argument("--jobs", type=int, default=1)
    p = sub.add_parser("report", help="summarise the outputs in a directory")
    p.add_argument("--out", required=True, type=Path)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "report":
            for name, summary in report(args.out).items():
                print(f"{name}:\n{_format_summary(summary)}")
            return 0
        if args.jobs < 1:
            raise ValueError("--jobs must be at least 1")
        summary = execute(args.command, args.scenario, args.out, args.format, args.slice, args.jobs)
        print(_format_summary(summary))
        return 0
    except ScenarioError as exc:
        print(exc, file=sys.stderr)
        return 2
    except (RefusedError, EmptyRunError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
