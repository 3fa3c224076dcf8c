"""Discretized constrained Bellman recursion.

At stage ``k``, state ``x`` and grid threshold ``r`` the operator minimizes
``c(x, u) + sum_y Q(y | x, u) V_{k+1}(y, r'(y))`` over admissible actions
``u`` and grid-valued threshold updates ``r'`` satisfying
``d(x, u) + rho(r') <= r``. No feasible pair gives ``+inf``.

Three engines solve that inner problem exactly and return identical results:

``naive``
    enumerates every action and every update vector, one threshold at a time.
``bnb``
    depth-first branch and bound over the update coordinates, one threshold
    at a time. Feasibility is a down-set (rho is monotone), so each branch
    starts at the largest feasible grid value; partial objectives plus the
    smallest remaining values bound each subtree, and nonincreasing value
    slices let a whole coordinate be cut at the first bound failure.
``sweep``
    enumerates the update vectors of each action once and answers every
    threshold of the grid together by sorting on the constraint value. This
    is the default for full solves.

Ties are broken towards the smallest action index, then the
lexicographically largest update vector (successors in declared order).
Successors with zero probability get the top grid value.
"""

from __future__ import annotations

import itertools
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .instance import MdpInstance, RiskSpec, c_max
from .risk import risk_batch, risk_value
from .thresholds import GridSet, InfeasibleThreshold

logger = logging.getLogger(__name__)

FEAS_TOL = 1e-12
ENGINES = ("naive", "bnb", "sweep")
SWEEP_CHUNK = 1 << 20


class SolveTimeout(RuntimeError):
    pass


class SolverInvariantError(AssertionError):
    pass


@dataclass(frozen=True, eq=False)
class StageProblem:
    """Everything the inner minimization at one ``(k, x)`` needs.

    ``probs[a]``, ``grids[y]`` and ``values[y]`` are indexed by the position
    ``a`` in ``actions`` and by successor state ``y``.
    """

    spec: RiskSpec
    actions: tuple[int, ...]
    cost: tuple[float, ...]
    risk_cost: tuple[float, ...]
    probs: tuple[tuple[float, ...], ...]
    grids: tuple[np.ndarray, ...]
    values: tuple[np.ndarray, ...]

    def with_values(self, values: Sequence[np.ndarray]) -> "StageProblem":
        return StageProblem(
            self.spec, self.actions, self.cost, self.risk_cost, self.probs, self.grids,
            tuple(np.asarray(v, dtype=float) for v in values),
        )


def stage_problem(instance: MdpInstance, grids: GridSet, k: int, x: int, next_values: Sequence[np.ndarray]) -> StageProblem:
    acts = instance.admissible[x]
    return StageProblem(
        spec=instance.risk,
        actions=tuple(acts),
        cost=tuple(float(instance.stage_cost[x, u]) for u in acts),
        risk_cost=tuple(float(instance.constraint_cost[x, u]) for u in acts),
        probs=tuple(tuple(float(p) for p in instance.transition[x, u]) for u in acts),
        grids=tuple(g.points for g in grids.grids[k + 1]),
        values=tuple(np.asarray(v, dtype=float) for v in next_values),
    )


@dataclass(frozen=True)
class InnerResult:
    value: float
    action: int | None
    next_index: tuple[int, ...] | None

    @property
    def feasible(self) -> bool:
        return self.action is not None


INFEASIBLE = InnerResult(math.inf, None, None)


def inner_minimize(problem: StageProblem, r: float, engine: str = "bnb") -> InnerResult:
    """Exact minimum of the discretized operator at a single threshold ``r``."""
    if engine == "naive":
        return _naive(problem, r)
    if engine == "bnb":
        return _bnb(problem, r)
    if engine == "sweep":
        vals, acts, nxt = _sweep(problem, np.array([r], dtype=float))
        if acts[0] < 0:
            return INFEASIBLE
        return InnerResult(float(vals[0]), int(acts[0]), tuple(int(i) for i in nxt[0]))
    raise ValueError(f"unknown engine {engine!r}; choose from {', '.join(ENGINES)}")


def stage_operator(problem: StageProblem, thresholds: np.ndarray, engine: str = "sweep"):
    """Apply the operator at every threshold.

    Returns ``(values, actions, next_index)`` arrays; infeasible rows carry
    ``inf``, action ``-1`` and indices ``-1``.
    """
    thresholds = np.asarray(thresholds, dtype=float)
    if engine == "sweep":
        return _sweep(problem, thresholds)
    n, n_s = len(thresholds), len(problem.grids)
    vals = np.full(n, np.inf)
    acts = np.full(n, -1, dtype=int)
    nxt = np.full((n, n_s), -1, dtype=int)
    for i, r in enumerate(thresholds):
        res = inner_minimize(problem, float(r), engine)
        if res.feasible:
            vals[i], acts[i], nxt[i] = res.value, res.action, res.next_index
    return vals, acts, nxt


def _naive(p: StageProblem, r: float) -> InnerResult:
    limit = r + FEAS_TOL
    grids = [g.tolist() for g in p.grids]
    vals = [v.tolist() for v in p.values]
    best = INFEASIBLE
    for a, u in enumerate(p.actions):
        q, c, d = p.probs[a], p.cost[a], p.risk_cost[a]
        support = [y for y, qy in enumerate(q) if qy > 0.0]
        # descending ranges visit update vectors in decreasing lexicographic order
        ranges = [range(len(g) - 1, -1, -1) for g in grids]
        for idx in itertools.product(*ranges):
            z = [grids[y][i] for y, i in enumerate(idx)]
            if d + risk_value(p.spec, z, q) > limit:
                continue
            obj = c
            for y in support:
                obj = obj + q[y] * vals[y][idx[y]]
            if obj < best.value:
                best = InnerResult(obj, u, tuple(idx))
    return best


def _bnb(p: StageProblem, r: float) -> InnerResult:
    limit = r + FEAS_TOL
    spec = p.spec
    grids = [g.tolist() for g in p.grids]
    vals = [v.tolist() for v in p.values]
    best = INFEASIBLE

    for a, u in enumerate(p.actions):
        q, c, d = p.probs[a], p.cost[a], p.risk_cost[a]
        support = [y for y, qy in enumerate(q) if qy > 0.0]
        m = len(support)
        zs = [grids[y] for y in support]
        vs = [vals[y] for y in support]
        qs = [q[y] for y in support]
        z = [g[-1] for g in grids]
        for y in support:
            z[y] = grids[y][0]
        if d + risk_value(spec, z, q) > limit:
            continue
        minv = [min(v) for v in vs]
        mono = [all(v[i] >= v[i + 1] for i in range(len(v) - 1)) for v in vs]
        idx = [len(g) - 1 for g in grids]
        for y in support:
            idx[y] = 0

        def largest_feasible(j: int) -> int:
            # coordinates after j sit at their lowest value; index 0 is feasible
            y, g = support[j], zs[j]
            lo, hi = 0, len(g) - 1
            z[y] = g[hi]
            if d + risk_value(spec, z, q) <= limit:
                return hi
            while hi - lo > 1:
                mid = (lo + hi) // 2
                z[y] = g[mid]
                if d + risk_value(spec, z, q) <= limit:
                    lo = mid
                else:
                    hi = mid
            return lo

        def descend(j: int, acc: float) -> None:
            nonlocal best
            y = support[j]
            top = largest_feasible(j)
            if j == m - 1:
                v = vs[j]
                if mono[j]:
                    pick, obj = top, acc + qs[j] * v[top]
                else:
                    pick, obj = -1, math.inf
                    for i in range(top, -1, -1):
                        o = acc + qs[j] * v[i]
                        if o < obj:
                            pick, obj = i, o
                if obj < best.value:
                    idx[y] = pick
                    best = InnerResult(obj, u, tuple(idx))
                z[y] = zs[j][0]
                idx[y] = 0
                return
            for i in range(top, -1, -1):
                acc2 = acc + qs[j] * vs[j][i]
                bound = acc2
                for t in range(j + 1, m):
                    bound = bound + qs[t] * minv[t]
                if bound >= best.value:
                    if mono[j]:
                        break
                    continue
                z[y] = zs[j][i]
                idx[y] = i
                descend(j + 1, acc2)
            z[y] = zs[j][0]
            idx[y] = 0

        descend(0, c)
    return best


def _sweep(p: StageProblem, thresholds: np.ndarray):
    n, n_s = len(thresholds), len(p.grids)
    limits = thresholds + FEAS_TOL
    best_val = np.full(n, np.inf)
    best_act = np.full(n, -1, dtype=int)
    best_nxt = np.full((n, n_s), -1, dtype=int)

    for a, u in enumerate(p.actions):
        q, c, d = p.probs[a], p.cost[a], p.risk_cost[a]
        support = [y for y, qy in enumerate(q) if qy > 0.0]
        q_sup = [q[y] for y in support]
        sizes = tuple(len(p.grids[y]) for y in support)
        total = math.prod(sizes)
        act_val = np.full(n, np.inf)
        act_flat = np.full(n, -1, dtype=np.int64)
        for lo in range(0, total, SWEEP_CHUNK):
            flat = np.arange(lo, min(total, lo + SWEEP_CHUNK), dtype=np.int64)
            coords = np.unravel_index(flat, sizes)
            z = np.column_stack([p.grids[y][i] for y, i in zip(support, coords)])
            lhs = d + risk_batch(p.spec, z, q_sup)
            obj = np.full(len(flat), c)
            for y, i in zip(support, coords):
                obj = obj + q[y] * p.values[y][i]
            order = np.argsort(lhs, kind="stable")
            # rank by (objective ascending, flat index descending)
            key = np.lexsort((-flat, obj))
            rank = np.empty(len(flat), dtype=np.int64)
            rank[key] = np.arange(len(flat))
            prefix_best = np.minimum.accumulate(rank[order])
            cnt = np.searchsorted(lhs[order], limits, side="right")
            hit = cnt > 0
            cand = key[prefix_best[cnt[hit] - 1]]
            c_val, c_flat = obj[cand], flat[cand]
            cur_val, cur_flat = act_val[hit], act_flat[hit]
            better = (c_val < cur_val) | ((c_val == cur_val) & (c_flat > cur_flat))
            act_val[hit] = np.where(better, c_val, cur_val)
            act_flat[hit] = np.where(better, c_flat, cur_flat)
        take = np.isfinite(act_val) & (act_val < best_val)
        if not take.any():
            continue
        best_val[take] = act_val[take]
        best_act[take] = u
        nxt = np.array([len(g) - 1 for g in p.grids], dtype=int)
        rows = np.tile(nxt, (int(take.sum()), 1))
        coords = np.unravel_index(act_flat[take], sizes)
        for y, i in zip(support, coords):
            rows[:, y] = i
        best_nxt[take] = rows
    return best_val, best_act, best_nxt


@dataclass(frozen=True, eq=False)
class ValueTable:
    """``values[k][x][i]`` is the discretized value at grid point ``i`` of ``(k, x)``."""

    grids: GridSet
    values: tuple[tuple[np.ndarray, ...], ...]

    def at(self, k: int, x: int) -> np.ndarray:
        return self.values[k][x]

    def query(self, x: int, r: float, k: int = 0) -> float:
        """Value at an arbitrary threshold: snap down to the grid, ``inf`` below it."""
        try:
            i = self.grids[k, x].locate(r)
        except InfeasibleThreshold:
            return math.inf
        return float(self.values[k][x][i])


@dataclass(frozen=True, eq=False)
class PolicyTable:
    """Minimizing action and threshold-update indices at every grid point.

    ``actions[k][x][i]`` is ``-1`` where the value is infinite.
    """

    grids: GridSet
    actions: tuple[tuple[np.ndarray, ...], ...]
    next_index: tuple[tuple[np.ndarray, ...], ...]

    def lookup(self, k: int, x: int, i: int) -> tuple[int, tuple[int, ...]]:
        try:
            u = int(self.actions[k][x][i])
        except IndexError:
            u = -1
        if u < 0:
            raise KeyError(f"no policy entry at stage {k}, state {x}, grid point {i}")
        return u, tuple(int(j) for j in self.next_index[k][x][i])

    def decision(self, k: int, x: int, i: int) -> tuple[int, tuple[float, ...]]:
        """Action and the threshold assigned to each successor."""
        u, nxt = self.lookup(k, x, i)
        return u, tuple(float(self.grids[k + 1, y].points[j]) for y, j in enumerate(nxt))


def query_value(values: ValueTable, x: int, r: float, k: int = 0) -> float:
    return values.query(x, r, k)


def value_iteration(
    instance: MdpInstance,
    grids: GridSet,
    engine: str = "sweep",
    threads: int = 1,
    deadline: float | None = None,
    check: bool = True,
) -> tuple[ValueTable, PolicyTable]:
    """Backward recursion over stages on the grids.

    ``deadline`` is a :func:`time.monotonic` timestamp; passing it raises
    :class:`SolveTimeout` between work items. With ``check`` the value bound
    and monotonicity invariants are asserted after the solve.
    """
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r}; choose from {', '.join(ENGINES)}")
    n, n_s = instance.horizon, instance.n_states
    values: list = [None] * (n + 1)
    actions: list = [None] * n
    nexts: list = [None] * n
    values[n] = tuple(np.zeros(1) for _ in range(n_s))

    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for k in range(n - 1, -1, -1):
            def work(x, k=k):
                if deadline is not None and time.monotonic() > deadline:
                    raise SolveTimeout(f"time budget exhausted at stage {k}")
                prob = stage_problem(instance, grids, k, x, values[k + 1])
                return stage_operator(prob, grids[k, x].points, engine)

            results = list(pool.map(work, range(n_s))) if pool else [work(x) for x in range(n_s)]
            for arr in (r for res in results for r in res):
                arr.setflags(write=False)
            values[k] = tuple(r[0] for r in results)
            actions[k] = tuple(r[1] for r in results)
            nexts[k] = tuple(r[2] for r in results)
            logger.debug("stage %d solved", k)
    finally:
        if pool:
            pool.shutdown()

    vt = ValueTable(grids, tuple(values))
    pt = PolicyTable(grids, tuple(actions), tuple(nexts))
    if check:
        problems = check_value_table(instance, vt)
        if problems:
            raise SolverInvariantError("; ".join(problems[:5]))
    return vt, pt


def check_value_table(instance: MdpInstance, table: ValueTable, tol: float = 1e-9) -> list[str]:
    """Violations of ``|V_k| <= (N - k) c_max`` and of monotonicity in the threshold."""
    cm = c_max(instance)
    n = instance.horizon
    out = []
    for k in range(n + 1):
        cap = (n - k) * cm + tol * max(1.0, (n - k) * cm)
        for x in range(instance.n_states):
            v = table.values[k][x]
            fin = v[np.isfinite(v)]
            if fin.size and np.abs(fin).max() > cap:
                out.append(f"|V| bound exceeded at stage {k}, state {x}")
            if not _nonincreasing(v):
                out.append(f"value increases with threshold at stage {k}, state {x}")
    return out


def _nonincreasing(v: np.ndarray) -> bool:
    return all(not (v[i + 1] > v[i]) for i in range(len(v) - 1))
