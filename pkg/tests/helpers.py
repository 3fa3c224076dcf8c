"""Random instance generation shared by the test modules."""

from __future__ import annotations

import numpy as np

from riskdp.instance import MdpInstance, RiskSpec, instance_from_arrays

SPECS = (
    RiskSpec.expectation(),
    RiskSpec.cvar(0.25),
    RiskSpec.cvar(0.5),
    RiskSpec.mean_semideviation(0.2, 2),
    RiskSpec.mean_semideviation(0.7, 1),
)


def random_instance(
    rng: np.random.Generator,
    max_states: int = 3,
    max_actions: int = 2,
    max_horizon: int = 3,
    risk: RiskSpec | None = None,
    sparse: bool = True,
) -> MdpInstance:
    n_s = int(rng.integers(1, max_states + 1))
    n_u = int(rng.integers(1, max_actions + 1))
    horizon = int(rng.integers(1, max_horizon + 1))
    c = np.round(rng.uniform(0, 10, (n_s, n_u)), 1)
    d = np.round(rng.uniform(0, 1, (n_s, n_u)), 2)
    q = rng.dirichlet(np.ones(n_s), size=(n_s, n_u))
    if sparse and n_s > 1:
        mask = rng.random((n_s, n_u, n_s)) < 0.25
        keep = rng.integers(n_s, size=(n_s, n_u))
        for x in range(n_s):
            for u in range(n_u):
                mask[x, u, keep[x, u]] = False
        q = np.where(mask, 0.0, q)
    q = q / q.sum(axis=2, keepdims=True)
    admissible = None
    if n_u > 1 and rng.random() < 0.3:
        admissible = [sorted(set(rng.choice(n_u, size=int(rng.integers(1, n_u + 1))).tolist())) for _ in range(n_s)]
    if risk is None:
        risk = SPECS[int(rng.integers(len(SPECS)))]
    return instance_from_arrays(c, d, q, horizon, risk, admissible=admissible)


def random_threshold(rng: np.random.Generator, grids, x0: int) -> float:
    g = grids[0, x0]
    return float(rng.uniform(g.lower, g.upper))


def random_stage_problem(rng: np.random.Generator, max_points: int = 8):
    """A random inner problem with ``|S| <= 3`` and at most ``max_points`` per successor.

    Value slices are nonincreasing half of the time (as produced by the
    solver) and arbitrary otherwise; the threshold is drawn around the
    feasibility boundary.
    """
    from riskdp.solver import StageProblem

    n_s = int(rng.integers(1, 4))
    n_u = int(rng.integers(1, 3))
    spec = SPECS[int(rng.integers(len(SPECS)))]
    grids, values = [], []
    for _ in range(n_s):
        size = int(rng.integers(1, max_points + 1))
        lo = float(np.round(rng.uniform(0, 1), 2))
        pts = np.sort(np.round(lo + rng.uniform(0, 1.5, size), 3))
        pts = np.unique(pts)
        pts[0] = lo
        grids.append(np.unique(pts))
        v = np.round(rng.uniform(0, 10, len(grids[-1])), 1)
        values.append(np.sort(v)[::-1].copy() if rng.random() < 0.5 else v)
    probs = []
    for _ in range(n_u):
        q = rng.dirichlet(np.ones(n_s))
        if n_s > 1 and rng.random() < 0.3:
            q[int(rng.integers(n_s))] = 0.0
            q = q / q.sum()
        probs.append(tuple(float(p) for p in q))
    problem = StageProblem(
        spec=spec,
        actions=tuple(range(n_u)),
        cost=tuple(float(v) for v in np.round(rng.uniform(0, 10, n_u), 1)),
        risk_cost=tuple(float(v) for v in np.round(rng.uniform(0, 1, n_u), 2)),
        probs=tuple(probs),
        grids=tuple(grids),
        values=tuple(values),
    )
    r = float(np.round(rng.uniform(0.2, 3.0), 3))
    return problem, r
