"""Command-line front end.

    stlddp run <scenario.json> [--seed N] [--k1 K] [--k2 K] [--max-iters N]
                               [--retries N] [--x0-index I] [--solver S] [--out DIR]
    stlddp bench [<out_dir>] [--seeds N] [--scenario NAME ...] [--workers N]
    stlddp monitor <signal.csv> --spec <file> [--k1 K] [--k2 K]

``run`` exits 0 when the certificate says Satisfied, 2 when NotCertified,
and 1 on any error. A bundled scenario can be named instead of a path
(``reach_avoid``, ``either_or``, ``arm_reach``). The output directory is
``--out``, else ``$STLDDP_OUT``, else ``./stlddp-out``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import StlDdpError
from .runner import format_table, monitor, run_benchmark_suite, run_scenario
from .scenario import bundled_scenarios
from .smoothing import SmoothParams

EXIT_SATISFIED, EXIT_ERROR, EXIT_NOT_CERTIFIED = 0, 1, 2


def _scenario_path(arg: str):
    p = Path(arg)
    if not p.exists():
        bundled = bundled_scenarios()
        if arg in bundled:
            return bundled[arg]
    return p


def _cmd_run(args) -> int:
    outcome = run_scenario(_scenario_path(args.scenario), args.out, x0_index=args.x0_index,
                           solver=args.solver, seed=args.seed, k1=args.k1, k2=args.k2,
                           max_iterations=args.max_iters, retries=args.retries)
    r = outcome.report
    print(f"{r.scenario}: {r.verdict} (exact robustness {r.exact_robustness:.6g}, "
          f"{r.exact_verdict}); {r.iterations} iterations, {r.retries_used} retries, "
          f"{r.wall_ms:.0f} ms")
    for kind, path in outcome.paths.items():
        print(f"  {kind}: {path}")
    return EXIT_SATISFIED if r.satisfied else EXIT_NOT_CERTIFIED


def _cmd_bench(args) -> int:
    rows = run_benchmark_suite(args.out_dir or args.out, seeds=range(args.seeds),
                               scenarios=args.scenario or None, workers=args.workers,
                               include_lqr=not args.no_lqr)
    print(format_table(rows))
    return EXIT_SATISFIED


def _cmd_monitor(args) -> int:
    res = monitor(args.signal, args.spec, params=SmoothParams(args.k1 or 10.0, args.k2 or 10.0))
    if args.json:
        print(json.dumps(res.to_dict(), indent=2))
    else:
        print(f"specification: {res.specification}")
        print(f"exact robustness: {res.exact_robustness:.6g} ({res.verdict})")
        print("t,margin")
        for t, v in enumerate(res.margins):
            print(f"{t},{float(v)!r}")
    return EXIT_SATISFIED if res.certified else EXIT_NOT_CERTIFIED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stlddp", description="STL trajectory synthesis with DDP.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="seed of the random initial guess")
    common.add_argument("--k1", type=float, help="smooth-min sharpness")
    common.add_argument("--k2", type=float, help="smooth-max sharpness")
    common.add_argument("--max-iters", type=int, help="solver iteration cap")
    common.add_argument("--retries", type=int, help="retry budget on NotCertified")
    common.add_argument("--out", help="output directory (default $STLDDP_OUT or ./stlddp-out)")

    run = sub.add_parser("run", parents=[common], help="solve one scenario")
    run.add_argument("scenario", help="scenario JSON file or bundled scenario name")
    run.add_argument("--x0-index", type=int, default=0,
                     help="pick an entry of x0 followed by x0_alternatives")
    run.add_argument("--solver", choices=("ddp", "first_order"), default="ddp")
    run.set_defaults(func=_cmd_run)

    bench = sub.add_parser("bench", parents=[common], help="run the benchmark suite")
    bench.add_argument("out_dir", nargs="?", help="output directory")
    bench.add_argument("--seeds", type=int, default=20, help="number of seeds (0..N-1)")
    bench.add_argument("--scenario", action="append", help="restrict to these scenarios")
    bench.add_argument("--workers", type=int, default=1)
    bench.add_argument("--no-lqr", action="store_true", help="skip the LQR validation row")
    bench.set_defaults(func=_cmd_bench)

    mon = sub.add_parser("monitor", parents=[common], help="robustness of a recorded signal")
    mon.add_argument("signal", help="CSV with one output vector per row")
    mon.add_argument("--spec", required=True,
                     help="JSON file with predicates, specification and optional horizon")
    mon.add_argument("--json", action="store_true", help="print a JSON object")
    mon.set_defaults(func=_cmd_monitor)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (StlDdpError, OSError, ValueError, KeyError, IndexError) as exc:
        context = getattr(args, "scenario", None) or getattr(args, "signal", None) or args.command
        print(f"error: {context}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
