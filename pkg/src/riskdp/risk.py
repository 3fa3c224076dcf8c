"""One-step coherent risk measures on finite outcome spaces.

Two evaluation paths are provided: :func:`risk_value` works on plain Python
sequences and :func:`risk_batch` on a 2-D array of outcome vectors. Both
perform the same floating-point operations in the same order, so their
results agree bit for bit. The solver relies on this to make feasibility
decisions identical across engines.

Outcomes with zero probability are skipped everywhere; they never influence
the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .instance import ROW_SUM_TOL, RiskSpec

AXIOM_TOL = 1e-9


class UnsupportedSpecError(ValueError):
    pass


@dataclass(frozen=True)
class OutcomeDistribution:
    """A finite random variable: ``values[i]`` occurs with probability ``probs[i]``."""

    values: tuple[float, ...]
    probs: tuple[float, ...]

    def __init__(self, values: Sequence[float], probs: Sequence[float]):
        values = tuple(float(v) for v in values)
        probs = tuple(float(p) for p in probs)
        if len(values) != len(probs) or not values:
            raise ValueError("values and probs must have equal nonzero length")
        if any(p < 0 for p in probs):
            raise ValueError("probabilities must be nonnegative")
        if abs(math.fsum(probs) - 1.0) > ROW_SUM_TOL:
            raise ValueError(f"probabilities sum to {math.fsum(probs)!r}, not 1")
        if not all(math.isfinite(v) for v in values):
            raise ValueError("values must be finite")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)


def risk_value(spec: RiskSpec, values: Sequence[float], probs: Sequence[float]) -> float:
    """Evaluate ``spec`` on one outcome vector. No input validation."""
    support = [i for i, p in enumerate(probs) if p > 0.0]
    z0 = values[support[0]]
    if all(values[i] == z0 for i in support):
        return float(z0)
    kind = spec.kind
    if kind == "expectation":
        return _mean(values, probs, support)
    if kind == "cvar":
        inv_alpha = 1.0 / spec.alpha
        best = math.inf
        for j in support:
            w = values[j]
            s = 0.0
            for i in support:
                s = s + probs[i] * max(values[i] - w, 0.0)
            best = min(best, w + s * inv_alpha)
        return best
    if kind == "mean_semideviation":
        m = _mean(values, probs, support)
        s = 0.0
        for i in support:
            dev = max(values[i] - m, 0.0)
            s = s + probs[i] * (dev * dev if spec.order == 2 else dev)
        spread = math.sqrt(s) if spec.order == 2 else s
        return m + spec.beta * spread
    raise UnsupportedSpecError(f"unknown risk kind {kind!r}")


def _mean(values, probs, support) -> float:
    acc = 0.0
    for i in support:
        acc = acc + probs[i] * values[i]
    return acc


def risk_batch(spec: RiskSpec, values: np.ndarray, probs: Sequence[float]) -> np.ndarray:
    """Evaluate ``spec`` on every row of ``values`` (shape ``(B, n)``)."""
    values = np.asarray(values, dtype=float)
    probs = [float(p) for p in probs]
    support = [i for i, p in enumerate(probs) if p > 0.0]
    cols = [values[:, i] for i in support]
    kind = spec.kind
    if kind == "expectation":
        out = _mean_batch(cols, probs, support)
    elif kind == "cvar":
        inv_alpha = 1.0 / spec.alpha
        out = np.full(values.shape[0], np.inf)
        for w in cols:
            s = np.zeros(values.shape[0])
            for i, col in zip(support, cols):
                s = s + probs[i] * np.maximum(col - w, 0.0)
            out = np.minimum(out, w + s * inv_alpha)
    elif kind == "mean_semideviation":
        m = _mean_batch(cols, probs, support)
        s = np.zeros(values.shape[0])
        for i, col in zip(support, cols):
            dev = np.maximum(col - m, 0.0)
            s = s + probs[i] * (dev * dev if spec.order == 2 else dev)
        spread = np.sqrt(s) if spec.order == 2 else s
        out = m + spec.beta * spread
    else:
        raise UnsupportedSpecError(f"unknown risk kind {kind!r}")
    const = np.ones(values.shape[0], dtype=bool)
    for col in cols[1:]:
        const &= col == cols[0]
    return np.where(const, cols[0], out)


def _mean_batch(cols, probs, support) -> np.ndarray:
    acc = np.zeros(cols[0].shape[0])
    for i, col in zip(support, cols):
        acc = acc + probs[i] * col
    return acc


def evaluate_risk(spec: RiskSpec, dist: OutcomeDistribution) -> float:
    """Risk of a validated outcome distribution under ``spec``.

    expectation is the probability-weighted mean; cvar(alpha) is the
    minimum over w of ``w + E[max(Z - w, 0)] / alpha`` (exact, the minimizer
    is one of the outcome values); mean_semideviation(beta, p) is
    ``E[Z] + beta * E[max(Z - E[Z], 0)^p]^(1/p)``.
    """
    return risk_value(spec, dist.values, dist.probs)


@dataclass(frozen=True)
class RiskEnvelope:
    """The dual set of probability vectors whose worst-case mean reproduces a measure.

    For expectation this is ``{Q}``; for cvar(alpha) it is
    ``{xi : 0 <= xi <= Q / alpha, sum(xi) = 1}``.
    """

    spec: RiskSpec
    probs: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.spec.kind not in ("expectation", "cvar"):
            raise UnsupportedSpecError(
                f"no envelope construction for {self.spec.kind}; evaluate it directly"
            )

    def contains(self, xi: Sequence[float], tol: float = 1e-12) -> bool:
        if len(xi) != len(self.probs) or abs(math.fsum(xi) - 1.0) > tol:
            return False
        cap = 1.0 if self.spec.kind == "expectation" else 1.0 / self.spec.alpha
        for x, q in zip(xi, self.probs):
            if x < -tol or x > cap * q + tol:
                return False
            if self.spec.kind == "expectation" and abs(x - q) > tol:
                return False
        return True

    def maximizer(self, values: Sequence[float]) -> list[float]:
        """A member of the envelope attaining the supremum of the mean of ``values``."""
        if self.spec.kind == "expectation":
            return list(self.probs)
        cap = 1.0 / self.spec.alpha
        xi = [0.0] * len(self.probs)
        remaining = 1.0
        for i in sorted(range(len(values)), key=lambda i: -values[i]):
            if self.probs[i] <= 0.0 or remaining <= 0.0:
                continue
            take = min(self.probs[i] * cap, remaining)
            xi[i] = take
            remaining -= take
        return xi


def envelope_supremum(spec: RiskSpec, dist: OutcomeDistribution) -> float:
    """Supremum of ``sum(xi * Z)`` over the risk envelope, built in closed form."""
    env = RiskEnvelope(spec, dist.probs)
    xi = env.maximizer(dist.values)
    return math.fsum(x * z for x, z in zip(xi, dist.values))


@dataclass
class CoherenceReport:
    spec: RiskSpec
    trials: int
    passed: bool
    axiom: str | None = None
    counterexample: dict | None = None

    def __str__(self) -> str:
        if self.passed:
            return f"{self.spec}: all axioms hold on {self.trials} trials"
        return f"{self.spec}: {self.axiom} violated by {self.counterexample}"


def check_coherence_axioms(spec: RiskSpec, trials: int, seed: int = 0) -> CoherenceReport:
    """Probe convexity, monotonicity, translation invariance and positive
    homogeneity on seeded random finite distributions.

    Supports have 2..6 outcomes with values in [-10, 10]. The first
    violation found (beyond 1e-9) is reported, not raised.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    for t in range(trials):
        n = int(rng.integers(2, 7))
        q = rng.dirichlet(np.ones(n))
        if n > 2 and rng.random() < 0.2:
            q[int(rng.integers(n))] = 0.0
            q = q / q.sum()
        q = q.tolist()
        z = rng.uniform(-10, 10, n).tolist()
        w = rng.uniform(-10, 10, n).tolist()
        lam = float(rng.random())
        scale = float(rng.uniform(0, 5))
        shift = float(rng.uniform(-10, 10))
        bump = rng.uniform(0, 5, n).tolist()
        rz = risk_value(spec, z, q)
        rw = risk_value(spec, w, q)

        def fail(axiom, **detail):
            detail.update(trial=t, Z=z, W=w, Q=q)
            return CoherenceReport(spec, trials, False, axiom, detail)

        mix = [lam * a + (1 - lam) * b for a, b in zip(z, w)]
        lhs = risk_value(spec, mix, q)
        rhs = lam * rz + (1 - lam) * rw
        if lhs > rhs + AXIOM_TOL:
            return fail("convexity", lam=lam, lhs=lhs, rhs=rhs)

        above = [a + b for a, b in zip(z, bump)]
        r_above = risk_value(spec, above, q)
        if rz > r_above + AXIOM_TOL:
            return fail("monotonicity", W=above, lhs=rz, rhs=r_above)

        shifted = risk_value(spec, [a + shift for a in z], q)
        if abs(shifted - (rz + shift)) > AXIOM_TOL:
            return fail("translation invariance", shift=shift, lhs=shifted, rhs=rz + shift)

        scaled = risk_value(spec, [scale * a for a in z], q)
        if abs(scaled - scale * rz) > AXIOM_TOL:
            return fail("positive homogeneity", scale=scale, lhs=scaled, rhs=scale * rz)
    return CoherenceReport(spec, trials, True)
