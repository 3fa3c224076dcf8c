"""Brute-force optimum over deterministic history-dependent policies.

Only histories reachable from the initial state matter. Because costs and
transitions are Markov, the tail policies chosen after different successor
states are independent, so the set of ``(J, R)`` pairs of all tail policies
from ``(k, x)`` is the union over actions of the Cartesian product of the
successor sets. Every policy is enumerated; nothing is pruned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..instance import MdpInstance
from ..risk import risk_batch
from ..solver import FEAS_TOL

DEFAULT_LIMIT = 10**7


class OracleLimitExceeded(RuntimeError):
    def __init__(self, count: int, limit: int):
        self.count = count
        self.limit = limit
        super().__init__(f"{count} policies exceed the enumeration limit {limit}")


@dataclass(frozen=True)
class OracleResult:
    value: float
    policy_count: int
    feasible_count: int


def policy_count(instance: MdpInstance, x0: int) -> int:
    """Number of deterministic policies restricted to histories reachable from ``x0``."""
    n = instance.horizon
    counts = [1] * instance.n_states
    for _ in range(n):
        counts = [
            sum(
                math.prod(counts[y] for y in range(instance.n_states) if instance.transition[x, u, y] > 0)
                for u in instance.admissible[x]
            )
            for x in range(instance.n_states)
        ]
    return counts[x0]


def tail_outcomes(instance: MdpInstance, k: int, x: int, memo: dict | None = None) -> tuple[np.ndarray, np.ndarray]:
    """``(J, R)`` arrays over every tail policy starting at stage ``k`` in state ``x``."""
    memo = {} if memo is None else memo
    if (k, x) in memo:
        return memo[k, x]
    if k == instance.horizon:
        out = (np.zeros(1), np.zeros(1))
        memo[k, x] = out
        return out
    js, rs = [], []
    for u in instance.admissible[x]:
        q = instance.transition[x, u]
        support = [y for y in range(instance.n_states) if q[y] > 0]
        subs = [tail_outcomes(instance, k + 1, y, memo) for y in support]
        grids = np.meshgrid(*[np.arange(len(s[0])) for s in subs], indexing="ij")
        picks = [g.ravel() for g in grids]
        cost = np.full(picks[0].shape, float(instance.stage_cost[x, u]))
        risk_in = np.empty((len(picks[0]), len(support)))
        for col, (y, sub, pick) in enumerate(zip(support, subs, picks)):
            cost = cost + float(q[y]) * sub[0][pick]
            risk_in[:, col] = sub[1][pick]
        risk = float(instance.constraint_cost[x, u]) + risk_batch(instance.risk, risk_in, [float(q[y]) for y in support])
        js.append(cost)
        rs.append(risk)
    out = (np.concatenate(js), np.concatenate(rs))
    memo[k, x] = out
    return out


def brute_force_optimum(instance: MdpInstance, x0: int, r0: float, limit: int = DEFAULT_LIMIT) -> OracleResult:
    """Smallest expected cost among policies whose dynamic risk is at most ``r0``.

    Returns ``inf`` when no policy is feasible. Raises
    :class:`OracleLimitExceeded` when the policy count is above ``limit``.
    """
    count = policy_count(instance, x0)
    if count > limit:
        raise OracleLimitExceeded(count, limit)
    j, r = tail_outcomes(instance, 0, x0)
    ok = r <= r0 + FEAS_TOL
    value = float(j[ok].min()) if ok.any() else math.inf
    return OracleResult(value, count, int(ok.sum()))
