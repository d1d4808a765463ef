"""Command line entry point: ``torflux run|verify|explain``."""
from __future__ import annotations

import argparse
import sys

from ..errors import TorfluxError
from .report import emit_report, empty_report
from .run import explain_task, run_scenario
from .scenario import ScenarioError, load_scenario
from .suite import verify_suite

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_NUMERIC = 3
EXIT_SUITE = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="torflux", description="Flux of bisection paths on flat torus models.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [("run", "run every task of a scenario"),
                            ("verify", "run the invariant suite"),
                            ("explain", "describe the formulas behind each task")]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--scenario", metavar="PATH", required=(name != "verify"))
        p.add_argument("--format", choices=("json", "text"), default="json")
        p.add_argument("--steps", type=int, metavar="N")
        p.add_argument("--grid", type=int, metavar="N")
        p.add_argument("--tolerance", type=float, metavar="X")
        p.add_argument("--out", metavar="PATH")
    return parser


def _write(data: bytes, out: str | None):
    if out:
        with open(out, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)
        if not data.endswith(b"\n"):
            sys.stdout.buffer.write(b"\n")
        sys.stdout.flush()


def _task_status(report: dict) -> int:
    for task in report["tasks"]:
        if task.get("type") == "verify":
            continue
        if not task.get("pass", True):
            status = "error" if "error" in task else "agreement outside tolerance"
            print(f"torflux: task {task['index']} ({task['type']}): {status}"
                  + (f": {task['error']}" if "error" in task else ""), file=sys.stderr)
            return EXIT_NUMERIC
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    sc = None
    if args.scenario:
        try:
            sc = load_scenario(args.scenario)
        except ScenarioError as exc:
            print(f"torflux: {args.scenario}: {exc}", file=sys.stderr)
            return EXIT_PARSE
        except OSError as exc:
            print(f"torflux: cannot read scenario: {exc}", file=sys.stderr)
            return EXIT_PARSE

    if args.command == "explain":
        text = "\n\n".join(f"[task.{t['index']}] " + explain_task(t) for t in sc.tasks) + "\n"
        _write(text.encode("utf-8"), args.out)
        return EXIT_OK

    overrides = {"steps": args.steps, "grid": args.grid, "tolerance": args.tolerance}
    try:
        if args.command == "verify":
            report = empty_report({"seed": 20240611})
            report["suite"] = verify_suite(sc)
        else:
            report = run_scenario(sc, overrides, suite_runner=verify_suite)
    except TorfluxError as exc:
        print(f"torflux: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _write(emit_report(report, args.format), args.out)

    suite = report.get("suite")
    if suite is not None and not suite["pass"]:
        for chk in suite["checks"]:
            if not chk["pass"]:
                print(f"torflux: suite check failed: {chk['name']}", file=sys.stderr)
        return EXIT_SUITE
    return _task_status(report)


if __name__ == "__main__":
    sys.exit(main())
