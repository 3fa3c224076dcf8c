"""Exact evaluation of a threshold-tracking policy on the augmented chain."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

from ..instance import MdpInstance
from ..risk import risk_value
from ..solver import PolicyTable
from ..thresholds import GridSet


class PolicyUndefined(KeyError):
    pass


@dataclass
class PolicyEvaluation:
    """Expected cost ``J``, nested dynamic risk ``R`` and the reachable
    ``(state, grid index) -> probability`` map for each stage."""

    expected_cost: float
    dynamic_risk: float
    root_index: int
    support: list[dict[tuple[int, int], float]] = field(default_factory=list)


def evaluate_policy(
    instance: MdpInstance,
    grids: GridSet,
    policy: PolicyTable,
    x0: int,
    r0: float,
) -> PolicyEvaluation:
    """Run ``policy`` from ``(x0, snap_down(r0))`` and evaluate it exactly.

    ``J`` follows the backward expectation recursion. ``R`` follows the nested
    recursion ``R_k(x, r) = d(x, u) + rho(R_{k+1}(., r'(.)))`` with
    ``R_N = 0``, under the transition law of the chosen action.
    """
    n = instance.horizon
    i0 = grids[0, x0].locate(r0)

    def decide(k, x, i):
        try:
            return policy.lookup(k, x, i)
        except (KeyError, IndexError):
            raise PolicyUndefined(
                f"policy undefined at stage {k}, state {instance.states[x]}, grid point {i}"
            ) from None

    @lru_cache(maxsize=None)
    def tail(k: int, x: int, i: int) -> tuple[float, float]:
        if k == n:
            return 0.0, 0.0
        u, nxt = decide(k, x, i)
        q = instance.transition[x, u].tolist()
        cost = float(instance.stage_cost[x, u])
        risks = [0.0] * instance.n_states
        for y, p in enumerate(q):
            if p > 0.0:
                j_y, r_y = tail(k + 1, y, nxt[y])
                cost = cost + p * j_y
                risks[y] = r_y
        return cost, float(instance.constraint_cost[x, u]) + risk_value(instance.risk, risks, q)

    j0, r_val = tail(0, x0, i0)

    support: list[dict[tuple[int, int], float]] = [{(x0, i0): 1.0}]
    for k in range(n):
        nxt_layer: dict[tuple[int, int], float] = {}
        for (x, i), mass in support[k].items():
            u, nxt = decide(k, x, i)
            for y, p in enumerate(instance.transition[x, u]):
                if p > 0.0:
                    key = (y, nxt[y])
                    nxt_layer[key] = nxt_layer.get(key, 0.0) + mass * float(p)
        support.append(nxt_layer)
    tail.cache_clear()
    return PolicyEvaluation(j0, r_val, i0, support)


def path_enumeration_cost(instance: MdpInstance, grids: GridSet, policy: PolicyTable, x0: int, r0: float) -> float:
    """Expected cost by summing over every sample path (forward enumeration)."""
    n = instance.horizon
    i0 = grids[0, x0].locate(r0)
    total = []

    def walk(k, x, i, prob, acc):
        if k == n:
            total.append(prob * acc)
            return
        u, nxt = policy.lookup(k, x, i)
        acc = acc + float(instance.stage_cost[x, u])
        for y, p in enumerate(instance.transition[x, u]):
            if p > 0.0:
                walk(k + 1, y, nxt[y], prob * float(p), acc)

    walk(0, x0, i0, 1.0, 0.0)
    return math.fsum(total)
