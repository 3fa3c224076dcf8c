"""Randomized checks of the discretized stage operator's order properties."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..instance import MdpInstance
from ..solver import stage_operator, stage_problem
from ..thresholds import GridSet

LAW_TOL = 1e-9


@dataclass
class HarnessReport:
    trials: int
    passed: bool
    law: str | None = None
    counterexample: dict | None = None
    max_shift_error: float = 0.0
    max_expansion: float = 0.0

    def __str__(self) -> str:
        if self.passed:
            return (
                f"operator laws hold on {self.trials} trials "
                f"(max shift error {self.max_shift_error:.3g}, max expansion {self.max_expansion:.3g})"
            )
        return f"{self.law} violated: {self.counterexample}"


def _same_support(a: np.ndarray, b: np.ndarray) -> bool:
    return bool(np.array_equal(np.isfinite(a), np.isfinite(b)))


def operator_property_harness(
    instance: MdpInstance,
    grids: GridSet,
    trials: int,
    seed: int = 0,
    engine: str = "sweep",
    scale: float = 10.0,
) -> HarnessReport:
    """Check monotonicity, constant shift and non-expansivity of the operator.

    Each trial picks a stage and state, draws bounded next-stage value
    slices ``V`` and ``W`` in ``[-scale, scale]``, a nonnegative bump and a
    shift ``L``, and compares operator outputs over the whole grid.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    report = HarnessReport(trials, True)
    n = instance.horizon
    for t in range(trials):
        k = int(rng.integers(n))
        x = int(rng.integers(instance.n_states))
        sizes = [g.size for g in grids.grids[k + 1]]
        v = [rng.uniform(-scale, scale, s) for s in sizes]
        w = [rng.uniform(-scale, scale, s) for s in sizes]
        above = [a + rng.uniform(0, scale, s) for a, s in zip(v, sizes)]
        shift = float(rng.uniform(-scale, scale))
        thresholds = grids[k, x].points
        base = stage_problem(instance, grids, k, x, v)

        def apply(values):
            return stage_operator(base.with_values(values), thresholds, engine)[0]

        tv, tw, ta = apply(v), apply(w), apply(above)
        ts = apply([a + shift for a in v])
        where = dict(trial=t, stage=k, state=x)

        if not (_same_support(tv, ta) and np.all(tv[np.isfinite(tv)] <= ta[np.isfinite(ta)] + LAW_TOL)):
            return HarnessReport(trials, False, "monotonicity", where)

        fin = np.isfinite(tv)
        if not _same_support(tv, ts):
            return HarnessReport(trials, False, "constant shift", where)
        err = float(np.max(np.abs(ts[fin] - (tv[fin] + shift)), initial=0.0))
        report.max_shift_error = max(report.max_shift_error, err)
        if err > LAW_TOL:
            return HarnessReport(trials, False, "constant shift", dict(where, error=err))

        if not _same_support(tv, tw):
            return HarnessReport(trials, False, "non-expansivity", where)
        gap = float(np.max(np.abs(tv[fin] - tw[fin]), initial=0.0))
        sup = max(float(np.max(np.abs(a - b))) for a, b in zip(v, w))
        report.max_expansion = max(report.max_expansion, gap - sup)
        if gap > sup + LAW_TOL:
            return HarnessReport(trials, False, "non-expansivity", dict(where, gap=gap, sup=sup))
    return report
