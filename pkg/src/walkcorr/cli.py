"""``walkcorr`` command line: plan, simulate, sweep, verify."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import (
    DivergenceError,
    InfeasiblePlanError,
    PreconditionError,
    ResourceError,
    WalkcorrError,
)
from .pipeline import ExperimentConfig, default_seed, load_grid, run_simulate, run_sweep
from .planner import ALGORITHMS, make_plan, plan_double, plan_single
from .verify import SUITES, run_verify

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3
EXIT_RESOURCE = 4
EXIT_SUITE = 5


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (InfeasiblePlanError, DivergenceError, PreconditionError)):
        return EXIT_INFEASIBLE
    if isinstance(exc, ResourceError):
        return EXIT_RESOURCE
    return EXIT_VALIDATION


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def _random_triple(text: str) -> tuple:
    """``n,d,seed`` or ``n,d`` (seed from the environment)."""
    parts = text.split(",")
    if len(parts) not in (2, 3):
        raise argparse.ArgumentTypeError("expected n,d[,seed]")
    try:
        vals = [int(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError("n,d,seed must be integers") from None
    return tuple(vals) if len(vals) == 3 else (vals[0], vals[1], None)


def cmd_plan(args) -> int:
    if args.algorithm:
        plan = make_plan(args.algorithm, args.tau, args.eps)
    elif args.rounds == 2:
        plan = plan_double(args.tau, args.eps)
    else:
        plan = plan_single(args.tau, args.eps)
    _emit(json.dumps(plan.summary(), sort_keys=True, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    ham = args.hamiltonian if args.hamiltonian else args.random
    cfg = ExperimentConfig(hamiltonian=ham, t=args.time, tau=args.tau, epsilon=args.eps,
                           algorithm=args.algorithm, output=args.out)
    rep = run_simulate(cfg)
    _emit(rep.to_json(), args.out)
    return EXIT_OK if rep.passed else EXIT_SUITE


def cmd_sweep(args) -> int:
    grid = load_grid(Path(args.config).read_text(encoding="utf-8"))
    text, reports = run_sweep(grid, workers=args.workers)
    _emit(text, args.out)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_SUITE


def cmd_verify(args) -> int:
    seed = args.seed if args.seed is not None else default_seed()
    results = run_verify(args.suite, seed=seed)
    ok = True
    for suite, check in results:
        print(f"[{suite}] {check.line()}")
        ok &= check.ok
    print("suite passed" if ok else "suite FAILED")
    return EXIT_OK if ok else EXIT_SUITE


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="walkcorr", description="Corrected quantum-walk simulation workbench.")
    sub = p.add_subparsers(dest="command", required=True)

    pl = sub.add_parser("plan", help="choose truncation and repetition parameters")
    pl.add_argument("--tau", type=float, required=True)
    pl.add_argument("--eps", type=float, required=True)
    pl.add_argument("--rounds", type=int, choices=(1, 2), default=1)
    pl.add_argument("--algorithm", choices=ALGORITHMS, help="overrides --rounds")
    pl.add_argument("--out")
    pl.set_defaults(func=cmd_plan)

    sm = sub.add_parser("simulate", help="run one end-to-end experiment")
    src = sm.add_mutually_exclusive_group(required=True)
    src.add_argument("--hamiltonian", help="path to a Hamiltonian JSON document")
    src.add_argument("--random", type=_random_triple, help="generator spec n,d[,seed]")
    when = sm.add_mutually_exclusive_group(required=True)
    when.add_argument("--time", type=float)
    when.add_argument("--tau", type=float, help="dimensionless size t*X*d instead of --time")
    sm.add_argument("--eps", type=float, required=True)
    sm.add_argument("--algorithm", choices=ALGORITHMS, default="corrected1")
    sm.add_argument("--out")
    sm.set_defaults(func=cmd_simulate)

    sw = sub.add_parser("sweep", help="run a JSON array of configs and write CSV")
    sw.add_argument("--config", required=True)
    sw.add_argument("--out")
    sw.add_argument("--workers", type=int, default=1)
    sw.set_defaults(func=cmd_sweep)

    vf = sub.add_parser("verify", help="run a property suite")
    vf.add_argument("--suite", choices=SUITES + ("all",), default="all")
    vf.add_argument("--seed", type=int)
    vf.set_defaults(func=cmd_verify)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except WalkcorrError as exc:
        print(f"walkcorr: error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    except OSError as exc:
        print(f"walkcorr: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
