"""Feasible risk-threshold intervals and their uniform grids."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .instance import MdpInstance, rho_max
from .risk import risk_value

logger = logging.getLogger(__name__)


class InfeasibleThreshold(ValueError):
    """A threshold lies below the smallest achievable tail risk."""


def min_risk_dp(instance: MdpInstance) -> np.ndarray:
    """Smallest achievable tail risk for every stage and state.

    Returns an array of shape ``(N + 1, |S|)`` computed by the exact
    unconstrained risk-averse recursion, with the last row zero.
    """
    n = instance.horizon
    table = np.zeros((n + 1, instance.n_states))
    for k in range(n - 1, -1, -1):
        nxt = table[k + 1].tolist()
        for x, acts in enumerate(instance.admissible):
            table[k, x] = min(
                instance.constraint_cost[x, u]
                + risk_value(instance.risk, nxt, instance.transition[x, u].tolist())
                for u in acts
            )
    return table


def default_epsilon(upper: float) -> float:
    return 1e-9 * max(1.0, upper)


def threshold_interval(instance: MdpInstance, k: int, x: int, min_risk: np.ndarray | None = None) -> tuple[float, float]:
    """``[lowest achievable tail risk, (N - k) * max d]`` for stage ``k`` and state ``x``."""
    n = instance.horizon
    if not 0 <= k <= n:
        raise ValueError(f"stage {k} outside 0..{n}")
    if k == n:
        return 0.0, 0.0
    if min_risk is None:
        min_risk = min_risk_dp(instance)
    lower = float(min_risk[k, x])
    upper = (n - k) * rho_max(instance)
    # rounding in the recursion may push lower a hair above the analytic cap
    return lower, max(upper, lower)


@dataclass(frozen=True, eq=False)
class ThresholdGrid:
    """Uniform grid ``lower = r0 < r1 < ... < r_{t+1} = upper + epsilon``.

    Grid point ``i`` represents the half-open cell ``[r_i, r_{i+1})``.
    """

    lower: float
    upper: float
    epsilon: float
    points: np.ndarray
    delta: float

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def top(self) -> float:
        return float(self.points[-1])

    def locate(self, r: float) -> int:
        """Index of the largest grid point not exceeding ``r``.

        Raises :class:`InfeasibleThreshold` below the grid and clamps to the
        top point above it, logging a warning.
        """
        if r < self.points[0]:
            raise InfeasibleThreshold(f"threshold {r!r} below the feasible minimum {self.lower!r}")
        if r >= self.top and self.size > 1:
            if r > self.top:
                logger.warning("threshold %r beyond grid top %r; clamped", r, self.top)
            return self.size - 1
        return int(np.searchsorted(self.points, r, side="right")) - 1

    def snap_down(self, r: float) -> float:
        return float(self.points[self.locate(r)])

    def summary(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "delta": self.delta,
            "points": self.size,
        }


def build_grid(lower: float, upper: float, t: int, epsilon: float | None = None) -> ThresholdGrid:
    """Grid with ``t`` interior points, i.e. ``t + 2`` points and ``t + 1`` cells.

    A degenerate interval (``upper <= lower``) yields the single point
    ``{lower}``.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if epsilon is None:
        epsilon = default_epsilon(upper)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if upper <= lower:
        pts = np.array([lower], dtype=float)
        pts.setflags(write=False)
        return ThresholdGrid(lower, upper, epsilon, pts, 0.0)
    top = upper + epsilon
    span = top - lower
    cells = t + 1
    # computing (i * span) / cells keeps coarse points exactly on nested finer grids
    pts = lower + (np.arange(cells + 1) * span) / cells
    pts[-1] = top
    pts.setflags(write=False)
    return ThresholdGrid(lower, upper, epsilon, pts, span / cells)


def terminal_grid() -> ThresholdGrid:
    pts = np.zeros(1)
    pts.setflags(write=False)
    return ThresholdGrid(0.0, 0.0, 0.0, pts, 0.0)


def regions_to_interior(m: int) -> int:
    """Interior point count for a grid of ``m`` regions (``m = 0`` acts as 1)."""
    if m < 0:
        raise ValueError("region count must be >= 0")
    return max(m, 1) - 1


@dataclass(frozen=True, eq=False)
class GridSet:
    """Grids for every stage and state, plus the min-risk table they start from."""

    regions: int
    min_risk: np.ndarray
    grids: tuple[tuple[ThresholdGrid, ...], ...]

    def __getitem__(self, key: tuple[int, int]) -> ThresholdGrid:
        k, x = key
        return self.grids[k][x]

    @property
    def horizon(self) -> int:
        return len(self.grids) - 1

    @property
    def max_delta(self) -> float:
        return max(g.delta for stage in self.grids for g in stage)


def build_grids(instance: MdpInstance, regions: int, epsilon: float | None = None) -> GridSet:
    """Grids over every ``[lower, upper]`` interval, ``regions`` cells each."""
    min_risk = min_risk_dp(instance)
    t = regions_to_interior(regions)
    stages = []
    for k in range(instance.horizon):
        row = []
        for x in range(instance.n_states):
            lo, hi = threshold_interval(instance, k, x, min_risk)
            row.append(build_grid(lo, hi, t, epsilon))
        stages.append(tuple(row))
    stages.append(tuple(terminal_grid() for _ in range(instance.n_states)))
    return GridSet(regions, min_risk, tuple(stages))
