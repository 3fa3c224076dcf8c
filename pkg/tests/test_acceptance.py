"""Acceptance criteria, each at its stated tolerance.

Every test records a one-line verdict in ``RESULTS``; ``conftest.py`` prints
them at the end of the run.
"""

import time

import numpy as np
import pytest

from riskdp.analysis import (
    brute_force_optimum,
    compute_error_bound,
    evaluate_policy,
    operator_property_harness,
)
from riskdp.instance import ConstantsBundle, RiskSpec
from riskdp.risk import (
    OutcomeDistribution,
    check_coherence_axioms,
    envelope_supremum,
    evaluate_risk,
)
from riskdp.solver import check_value_table, inner_minimize, value_iteration
from riskdp.thresholds import build_grids

from helpers import random_instance, random_stage_problem, random_threshold

RESULTS: dict[str, tuple[bool, str]] = {}


def record(key: str, passed: bool, detail: str) -> None:
    RESULTS[key] = (bool(passed), detail)
    print(f"criterion {key}: {'PASS' if passed else 'FAIL'}  {detail}")
    assert passed, detail


LADDER = (5, 10, 20, 40, 80, 160)


@pytest.fixture(scope="module")
def three_state_ladder(three_state):
    start = time.monotonic()
    tables = {m: value_iteration(three_state, build_grids(three_state, m))[0] for m in LADDER}
    return tables, time.monotonic() - start


def ladder_values(tables, x0):
    """Root values for every M, at every point of the finest grid.

    All differences between nested-grid values are constant on the finest
    cells, so these points cover every threshold.
    """
    pts = tables[LADDER[-1]].grids[0, x0].points
    return {m: np.array([tables[m].query(x0, float(r)) for r in pts]) for m in LADDER}


def test_1_three_state_ladder(three_state_ladder):
    tables, wall = three_state_ladder
    monotone, gaps = True, []
    for x0 in range(3):
        v = ladder_values(tables, x0)
        monotone &= all(np.all(v[b] <= v[a]) for a, b in zip(LADDER, LADDER[1:]))
        gaps.append((np.abs(v[80] - v[160]).max(), np.abs(v[20] - v[40]).max()))
    contracting = all(fine <= coarse for fine, coarse in gaps)
    detail = (
        f"nonincreasing={monotone}; sup|V80-V160| vs sup|V20-V40| per state "
        + ", ".join(f"{f:.3g}<={c:.3g}" for f, c in gaps)
        + f"; ladder {wall:.1f}s"
    )
    record("1", monotone and contracting and wall < 600, detail)


@pytest.mark.xfail(strict=True, reason="a fixed threshold sees a staircase in M; a step can fall between 80 and 160 alone")
def test_1_pointwise_reading(three_state_ladder):
    tables, _ = three_state_ladder
    fails = total = 0
    for x0 in range(3):
        v = ladder_values(tables, x0)
        bad = np.abs(v[80] - v[160]) > np.abs(v[20] - v[40])
        fails, total = fails + int(bad.sum()), total + bad.size
    record("1 (pointwise reading)", fails == 0,
           f"|V80-V160| <= |V20-V40| fails at {fails} of {total} thresholds (expected, see ledger)")


def test_2_oracle_sandwich():
    rng = np.random.default_rng(2024)
    ladder = (5, 10, 20, 40, 80)
    gaps, violations = [], 0
    for _ in range(300):
        inst = random_instance(rng)
        x0 = int(rng.integers(inst.n_states))
        r0 = random_threshold(rng, build_grids(inst, 1), x0)
        best = brute_force_optimum(inst, x0, r0).value
        row = []
        for m in ladder:
            v = value_iteration(inst, build_grids(inst, m))[0].query(x0, r0)
            violations += not best <= v + 1e-9
            row.append(v - best)
        gaps.append(row)
    mean = np.array(gaps).mean(axis=0)
    # every doubling step is one (delta, delta/2) pair
    ratio = mean[1:].sum() / mean[:-1].sum()
    steps = ", ".join(f"{ladder[i]}->{ladder[i + 1]}: {mean[i + 1] / mean[i]:.3f}" for i in range(len(ladder) - 1))
    detail = f"300 instances, sandwich violations {violations}; pooled ratio {ratio:.3f} ({steps})"
    record("2", violations == 0 and ratio <= 0.75, detail)


def test_3_exact_feasibility():
    rng = np.random.default_rng(31)
    worst, fails, trials = -np.inf, 0, 300
    for _ in range(trials):
        inst = random_instance(rng)
        grids = build_grids(inst, int(rng.integers(0, 30)))
        _, policy = value_iteration(inst, grids)
        x0 = int(rng.integers(inst.n_states))
        r0 = random_threshold(rng, grids, x0)
        excess = evaluate_policy(inst, grids, policy, x0, r0).dynamic_risk - r0
        worst = max(worst, excess)
        fails += excess > 1e-12
    record("3", fails == 0, f"{trials} trials, {fails} with R > r0 + 1e-12, max R - r0 = {worst:.3g}")


RISK_KINDS = {
    "expectation": RiskSpec.expectation(),
    "cvar": RiskSpec.cvar(0.3),
    "mean_semideviation": RiskSpec.mean_semideviation(0.2, 2),
}


@pytest.mark.parametrize("kind", list(RISK_KINDS))
def test_4_operator_laws(kind):
    rng = np.random.default_rng(41)
    failures = []
    for i in range(10):
        inst = random_instance(rng, risk=RISK_KINDS[kind])
        while inst.horizon < 2:
            inst = random_instance(rng, risk=RISK_KINDS[kind])
        report = operator_property_harness(inst, build_grids(inst, 6), 100, seed=i)
        if not report.passed:
            failures.append(str(report))
    record(f"4 ({kind})", not failures, f"1000 trials, counterexamples: {failures[:1] or 'none'}")


SPECS_5 = (RiskSpec.expectation(), RiskSpec.cvar(0.25), RiskSpec.cvar(0.5), RiskSpec.mean_semideviation(0.2, 2))


@pytest.mark.parametrize("spec", SPECS_5, ids=str)
def test_5_coherence(spec):
    report = check_coherence_axioms(spec, 1000, seed=5)
    detail = str(report)
    passed = report.passed
    if spec.kind != "mean_semideviation":
        rng = np.random.default_rng(55)
        worst = 0.0
        for _ in range(1000):
            n = int(rng.integers(1, 7))
            d = OutcomeDistribution(rng.uniform(-10, 10, n), rng.dirichlet(np.ones(n)))
            worst = max(worst, abs(envelope_supremum(spec, d) - evaluate_risk(spec, d)))
        passed &= worst <= 1e-9
        detail += f"; envelope max gap {worst:.3g} on 1000 trials"
    record(f"5 ({spec})", passed, detail)


def test_6_bound_calculator():
    example = compute_error_bound(ConstantsBundle(2.0, 0.0, 0.4, 0.5, 6.0, ()), 0.1, 3)
    ok = abs(example.total - 1.69) <= 1e-9
    parts = [f"example total {example.total:.12g}"]
    for m_r in (0.1, 0.5, 0.9, 2.0):
        rep = compute_error_bound(ConstantsBundle(2.0, 0.0, 0.4, m_r, 6.0, ()), 0.1, 3)
        agree = abs(rep.closed_form - rep.total) <= 1e-9 * max(1.0, rep.total)
        ok &= agree
        parts.append(f"M_r={m_r}: {rep.total:.6g} vs {rep.closed_form:.6g}")
    record("6", ok, "; ".join(parts))


def test_7_value_bound():
    rng = np.random.default_rng(71)
    violations, solves = [], 200
    for _ in range(solves):
        inst = random_instance(rng, max_horizon=4)
        values, _ = value_iteration(inst, build_grids(inst, int(rng.integers(0, 25))), check=False)
        violations += check_value_table(inst, values)
    record("7", not violations, f"{solves} solves, {len(violations)} violations {violations[:1]}")


def test_8_engine_equivalence():
    rng = np.random.default_rng(81)
    mismatches = feasible = 0
    for _ in range(500):
        problem, r = random_stage_problem(rng, max_points=8)
        naive = inner_minimize(problem, r, "naive")
        feasible += naive.feasible
        if inner_minimize(problem, r, "bnb") != naive or inner_minimize(problem, r, "sweep") != naive:
            mismatches += 1
    record("8", mismatches == 0, f"500 stage problems ({feasible} feasible), {mismatches} mismatches across naive/bnb/sweep")
