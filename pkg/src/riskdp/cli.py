"""Command-line front end.

Commands: ``solve``, ``sweep``, ``oracle``, ``check``, ``simulate``.
Exit codes: 0 success, 1 a check found a counterexample, 2 invalid input,
3 infeasible threshold, 4 oracle limit exceeded.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import time
from pathlib import Path

from . import data
from .analysis.bounds import compute_error_bound
from .analysis.evaluation import evaluate_policy
from .analysis.harness import operator_property_harness
from .analysis.oracle import DEFAULT_LIMIT, OracleLimitExceeded, brute_force_optimum
from .analysis.sweep import format_number, sweep_grid_sizes, write_csv
from .instance import DEFAULT_M_R, ConstantsBundle, InstanceError, MdpInstance, RiskSpec, load_instance
from .report import build_solve_report, dumps, file_digest
from .risk import check_coherence_axioms
from .solver import ENGINES, value_iteration
from .thresholds import build_grids

EXIT_OK, EXIT_CHECK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_ORACLE = 0, 1, 2, 3, 4
DEFAULT_LADDER = "5,10,20,40,60,80,100,150"

log = logging.getLogger("riskdp")


class UsageError(Exception):
    pass


def resolve_instance_path(spec: str) -> Path:
    if spec.startswith("builtin:"):
        try:
            return data.instance_path(spec.split(":", 1)[1])
        except FileNotFoundError as exc:
            raise InstanceError([str(exc)]) from None
    return Path(spec)


def _load(args) -> tuple[MdpInstance, str]:
    path = resolve_instance_path(args.instance)
    if not path.exists():
        raise InstanceError([f"instance file {path} not found"])
    return load_instance(path), file_digest(path)


def _state(instance: MdpInstance, name: str) -> int:
    try:
        return instance.state_index(name)
    except KeyError as exc:
        raise InstanceError([str(exc.args[0])]) from None


def fmt(v: float | None) -> str:
    return format_number(v)


def _solve(args, instance):
    grids = build_grids(instance, args.grid_m, args.epsilon)
    start = time.monotonic()
    values, policy = value_iteration(instance, grids, engine=args.engine, threads=args.threads)
    return grids, values, policy, (time.monotonic() - start) * 1e3


def _root(instance, grids, values, policy, x0, r0) -> dict:
    v = values.query(x0, r0)
    if not math.isfinite(v):
        return {"state": instance.states[x0], "r0": r0, "value": v, "action": None, "next": None}
    i = grids[0, x0].locate(r0)
    u, nxt = policy.decision(0, x0, i)
    return {
        "state": instance.states[x0],
        "r0": r0,
        "grid_threshold": float(grids[0, x0].points[i]),
        "value": v,
        "action": instance.actions[u],
        "next": {instance.states[y]: t for y, t in enumerate(nxt)},
    }


def cmd_solve(args) -> int:
    instance, digest = _load(args)
    x0 = _state(instance, args.x0)
    grids, values, policy, wall = _solve(args, instance)
    root = _root(instance, grids, values, policy, x0, args.r0)
    constants = ConstantsBundle.from_instance(instance, args.mr)
    bound = compute_error_bound(constants, grids.max_delta, instance.horizon)
    settings = {
        "x0": instance.states[x0],
        "r0": args.r0,
        "grid_m": args.grid_m,
        "epsilon": args.epsilon,
        "engine": args.engine,
        "M_r": args.mr,
    }
    report = build_solve_report(
        instance, digest, settings, values, policy, constants, bound, root, {"solve_ms": wall}
    )
    if args.out:
        Path(args.out).write_text(dumps(report), encoding="utf-8")
    print(f"value {fmt(root['value'])}")
    if root["action"] is None:
        print(f"threshold {args.r0!r} is infeasible at state {instance.states[x0]}")
        return EXIT_INFEASIBLE
    nxt = ", ".join(f"{s}: {fmt(t)}" for s, t in root["next"].items())
    print(f"action {root['action']}  next thresholds {{{nxt}}}")
    print(f"error bound {fmt(bound.total)} (M_r = {args.mr:g}, user-supplied)")
    return EXIT_OK


def _parse_ladder(text: str) -> list[int]:
    text = text.strip()
    if not text:
        return []
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"region list {text!r} must be comma-separated integers") from None


def cmd_sweep(args) -> int:
    instance, _ = _load(args)
    x0 = _state(instance, args.x0)
    ladder = _parse_ladder(args.grid_m)
    rows = sweep_grid_sizes(
        instance, x0, args.r0, ladder, engine=args.engine, oracle_limit=args.limit,
        time_budget=args.time_budget, epsilon=args.epsilon, threads=args.threads,
    )
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_csv(rows, fh)
    else:
        write_csv(rows, sys.stdout)
    return EXIT_OK


def cmd_oracle(args) -> int:
    instance, _ = _load(args)
    x0 = _state(instance, args.x0)
    try:
        res = brute_force_optimum(instance, x0, args.r0, args.limit)
    except OracleLimitExceeded as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_ORACLE
    print(f"optimum {fmt(res.value)}")
    print(f"policies {res.policy_count}  feasible {res.feasible_count}")
    return EXIT_OK if math.isfinite(res.value) else EXIT_INFEASIBLE


def cmd_check(args) -> int:
    instance, _ = _load(args)
    failed = False
    specs = [instance.risk]
    for extra in (RiskSpec.expectation(), RiskSpec.cvar(0.5)):
        if extra != instance.risk:
            specs.append(extra)
    for spec in specs:
        rep = check_coherence_axioms(spec, args.trials, args.seed)
        print(f"coherence {'PASS' if rep.passed else 'FAIL'}  {rep}")
        failed |= not rep.passed
    grids = build_grids(instance, args.grid_m, args.epsilon)
    rep = operator_property_harness(instance, grids, args.trials, args.seed)
    print(f"operator  {'PASS' if rep.passed else 'FAIL'}  {rep}")
    failed |= not rep.passed
    return EXIT_CHECK if failed else EXIT_OK


def cmd_simulate(args) -> int:
    instance, _ = _load(args)
    x0 = _state(instance, args.x0)
    grids, values, policy, _ = _solve(args, instance)
    if not math.isfinite(values.query(x0, args.r0)):
        print(f"threshold {args.r0!r} is infeasible at state {instance.states[x0]}")
        return EXIT_INFEASIBLE
    ev = evaluate_policy(instance, grids, policy, x0, args.r0)
    print(f"J {fmt(ev.expected_cost)}")
    print(f"R {fmt(ev.dynamic_risk)}")
    print(f"margin {fmt(args.r0 - ev.dynamic_risk)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="riskdp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--instance", required=True, help="instance JSON path, or builtin:three_state")
    common.add_argument("--epsilon", type=float, default=None, help="grid top extension (default relative 1e-9)")
    common.add_argument("--engine", choices=ENGINES, default="sweep")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None)
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--mr", type=float, default=DEFAULT_M_R, help="M_r used by the error bound")

    start = argparse.ArgumentParser(add_help=False)
    start.add_argument("--x0", required=True, help="initial state name")
    start.add_argument("--r0", type=float, required=True, help="risk threshold")

    p = sub.add_parser("solve", parents=[common, start], help="solve and write a report")
    p.add_argument("--grid-m", type=int, default=100)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", parents=[common, start], help="root value over a grid ladder (CSV)")
    p.add_argument("--grid-m", default=DEFAULT_LADDER, help="comma-separated region counts")
    p.add_argument("--limit", type=int, default=DEFAULT_LIMIT)
    p.add_argument("--time-budget", type=float, default=None, help="seconds per solve")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", parents=[common, start], help="brute-force optimum")
    p.add_argument("--limit", type=int, default=DEFAULT_LIMIT)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("check", parents=[common], help="coherence and operator-law harnesses")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--grid-m", type=int, default=5)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", parents=[common, start], help="evaluate the extracted policy")
    p.add_argument("--grid-m", type=int, default=100)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("RISKDP_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InstanceError as exc:
        for v in exc.violations:
            print(f"invalid instance: {v}", file=sys.stderr)
        return EXIT_INVALID
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
