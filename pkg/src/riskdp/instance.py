"""Problem instances: a finite MDP with a stage cost, a constraint cost and a risk spec.

The raw (file) form is a JSON-compatible mapping::

    {
      "states": ["1", "2", "3"],
      "actions": [{"name": "a", "embedding": 1.0}, ...],
      "admissible": {"1": ["a", "b"], ...},          # optional, default all
      "Q": {"a": [[...], ...], ...},                  # |S| x |S| per action
      "c": [[...], ...], "d": [[...], ...],           # |S| x |U|, null if inadmissible
      "horizon": 3,
      "risk": {"kind": "mean_semideviation", "beta": 0.2, "order": 2}
    }
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

ROW_SUM_TOL = 1e-12
RISK_KINDS = ("expectation", "cvar", "mean_semideviation")


class InstanceError(ValueError):
    """Raised when a candidate instance fails validation.

    ``violations`` holds one message per problem found, each naming the
    offending field and index.
    """

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class RiskSpec:
    """Parameters of the one-step coherent risk measure used at every stage.

    Direct construction does not validate; use the named constructors or
    :meth:`problems` to check parameters.
    """

    kind: str = "expectation"
    alpha: float | None = None
    beta: float | None = None
    order: int | None = None

    @classmethod
    def expectation(cls) -> "RiskSpec":
        return cls._checked(kind="expectation")

    @classmethod
    def cvar(cls, alpha: float) -> "RiskSpec":
        return cls._checked(kind="cvar", alpha=float(alpha))

    @classmethod
    def mean_semideviation(cls, beta: float, order: int = 2) -> "RiskSpec":
        return cls._checked(kind="mean_semideviation", beta=float(beta), order=int(order))

    @classmethod
    def _checked(cls, **kwargs: Any) -> "RiskSpec":
        spec = cls(**kwargs)
        problems = spec.problems()
        if problems:
            raise InstanceError(problems)
        return spec

    def problems(self) -> list[str]:
        if self.kind not in RISK_KINDS:
            return [f"risk.kind {self.kind!r} not one of {', '.join(RISK_KINDS)}"]
        out = []
        if self.kind == "cvar":
            if self.alpha is None or not (0.0 < self.alpha <= 1.0):
                out.append(f"risk.alpha must lie in (0, 1], got {self.alpha!r}")
        if self.kind == "mean_semideviation":
            if self.beta is None or not (0.0 <= self.beta <= 1.0):
                out.append(f"risk.beta must lie in [0, 1], got {self.beta!r}")
            if self.order not in (1, 2):
                out.append(f"risk.order must be 1 or 2, got {self.order!r}")
        return out

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind}
        if self.kind == "cvar":
            out["alpha"] = self.alpha
        elif self.kind == "mean_semideviation":
            out["beta"] = self.beta
            out["order"] = self.order
        return out

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "RiskSpec":
        kind = raw.get("kind", "expectation")
        alpha = raw.get("alpha")
        beta = raw.get("beta")
        order = raw.get("order")
        if kind == "mean_semideviation" and order is None:
            order = 2
        return cls(
            kind=kind,
            alpha=None if alpha is None else float(alpha),
            beta=None if beta is None else float(beta),
            order=None if order is None else int(order),
        )

    def __str__(self) -> str:
        if self.kind == "cvar":
            return f"cvar(alpha={self.alpha:g})"
        if self.kind == "mean_semideviation":
            return f"mean_semideviation(beta={self.beta:g}, order={self.order})"
        return "expectation"


@dataclass(frozen=True, eq=False)
class MdpInstance:
    """A validated, immutable risk-constrained MDP.

    Arrays are indexed by position in ``states`` / ``actions``. Entries of
    ``stage_cost`` and ``constraint_cost`` for inadmissible pairs are NaN and
    the corresponding ``transition`` rows are zero.
    """

    states: tuple[str, ...]
    actions: tuple[str, ...]
    embedding: np.ndarray
    admissible: tuple[tuple[int, ...], ...]
    transition: np.ndarray
    stage_cost: np.ndarray
    constraint_cost: np.ndarray
    horizon: int
    risk: RiskSpec

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    def state_index(self, name: str | int) -> int:
        if isinstance(name, (int, np.integer)) and not isinstance(name, bool):
            if 0 <= name < self.n_states:
                return int(name)
            raise KeyError(f"state index {name} out of range")
        try:
            return self.states.index(str(name))
        except ValueError:
            raise KeyError(f"unknown state {name!r}") from None

    def pairs(self):
        """Yield every admissible ``(x, u)`` index pair."""
        for x, acts in enumerate(self.admissible):
            for u in acts:
                yield x, u

    def to_dict(self) -> dict[str, Any]:
        def matrix(arr):
            return [[None if math.isnan(v) else float(v) for v in row] for row in arr]

        return {
            "states": list(self.states),
            "actions": [
                {"name": a, "embedding": float(e)} for a, e in zip(self.actions, self.embedding)
            ],
            "admissible": {
                self.states[x]: [self.actions[u] for u in acts]
                for x, acts in enumerate(self.admissible)
            },
            "Q": {
                a: [[float(v) for v in self.transition[x, u]] for x in range(self.n_states)]
                for u, a in enumerate(self.actions)
            },
            "c": matrix(self.stage_cost),
            "d": matrix(self.constraint_cost),
            "horizon": self.horizon,
            "risk": self.risk.to_dict(),
        }


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool)


def validate_instance(raw: Mapping[str, Any] | MdpInstance) -> MdpInstance:
    """Validate a raw instance description and return the immutable instance.

    An already-validated :class:`MdpInstance` is re-checked and returned
    unchanged. Raises :class:`InstanceError` listing every violation.
    """
    if isinstance(raw, MdpInstance):
        problems = _check_validated(raw)
        if problems:
            raise InstanceError(problems)
        return raw

    problems: list[str] = []
    if not isinstance(raw, Mapping):
        raise InstanceError(["instance must be a JSON object"])

    states = raw.get("states")
    if not isinstance(states, Sequence) or isinstance(states, str) or len(states) == 0:
        raise InstanceError(["states must be a nonempty array"])
    states = tuple(str(s) for s in states)
    if len(set(states)) != len(states):
        problems.append("states contains duplicate names")

    raw_actions = raw.get("actions")
    if not isinstance(raw_actions, Sequence) or isinstance(raw_actions, str) or len(raw_actions) == 0:
        raise InstanceError(problems + ["actions must be a nonempty array"])
    names, embedding = [], []
    for i, a in enumerate(raw_actions):
        if isinstance(a, Mapping):
            if "name" not in a:
                problems.append(f"actions[{i}] missing name")
                continue
            names.append(str(a["name"]))
            emb = a.get("embedding", i + 1)
            if not _is_number(emb) or not math.isfinite(emb):
                problems.append(f"actions[{i}].embedding must be a finite number")
                emb = float(i + 1)
            embedding.append(float(emb))
        else:
            names.append(str(a))
            embedding.append(float(i + 1))
    actions = tuple(names)
    if len(set(actions)) != len(actions):
        problems.append("actions contains duplicate names")
    if problems:
        raise InstanceError(problems)
    n_s, n_u = len(states), len(actions)

    raw_adm = raw.get("admissible")
    admissible: list[tuple[int, ...]] = []
    for x, s in enumerate(states):
        if raw_adm is None:
            admissible.append(tuple(range(n_u)))
            continue
        acts = raw_adm.get(s) if isinstance(raw_adm, Mapping) else None
        if not acts:
            problems.append(f"admissible set empty at x={s}")
            admissible.append(())
            continue
        idx = []
        for a in acts:
            if str(a) not in actions:
                problems.append(f"admissible[{s}] names unknown action {a!r}")
            else:
                idx.append(actions.index(str(a)))
        admissible.append(tuple(sorted(set(idx))))

    horizon = raw.get("horizon")
    if not isinstance(horizon, (int, np.integer)) or isinstance(horizon, bool) or horizon < 1:
        problems.append(f"horizon must be an integer >= 1, got {horizon!r}")
        horizon = 1

    raw_risk = raw.get("risk", {"kind": "expectation"})
    if not isinstance(raw_risk, Mapping):
        problems.append("risk must be an object")
        risk = RiskSpec()
    else:
        try:
            risk = RiskSpec.from_dict(raw_risk)
        except (TypeError, ValueError) as exc:
            problems.append(f"risk malformed: {exc}")
            risk = RiskSpec()
        problems.extend(risk.problems())

    stage_cost = _read_cost(raw.get("c"), "c", states, actions, admissible, problems)
    constraint_cost = _read_cost(raw.get("d"), "d", states, actions, admissible, problems)
    for x, u in ((x, u) for x, acts in enumerate(admissible) for u in acts):
        v = constraint_cost[x, u]
        if not math.isnan(v) and v < 0:
            problems.append(
                f"negative constraint cost d={v:g} at (x={states[x]},u={actions[u]}); "
                "shift d and r0 by a constant to make d nonnegative"
            )

    transition = np.zeros((n_s, n_u, n_s))
    raw_q = raw.get("Q")
    if not isinstance(raw_q, Mapping):
        problems.append("Q must map action names to |S|x|S| matrices")
    else:
        for u, a in enumerate(actions):
            users = [x for x in range(n_s) if u in admissible[x]]
            if not users:
                continue
            mat = raw_q.get(a)
            if mat is None:
                problems.append(f"Q missing matrix for action {a}")
                continue
            if not isinstance(mat, Sequence) or len(mat) != n_s:
                problems.append(f"Q[{a}] must have {n_s} rows")
                continue
            for x in users:
                row = mat[x]
                if row is None or not isinstance(row, Sequence) or len(row) != n_s:
                    problems.append(f"Q[{a}] row for x={states[x]} must have {n_s} entries")
                    continue
                if not all(_is_number(p) and math.isfinite(p) for p in row):
                    problems.append(f"Q[{a}] row for x={states[x]} has non-numeric entries")
                    continue
                row = np.array(row, dtype=float)
                for y, p in enumerate(row):
                    if p < 0:
                        problems.append(
                            f"negative probability {p:g} at (x={states[x]},u={a},x'={states[y]})"
                        )
                total = float(math.fsum(row))
                if abs(total - 1.0) > ROW_SUM_TOL:
                    problems.append(f"row sum {total:g} ≠ 1 at (x={states[x]},u={a})")
                transition[x, u] = row

    if problems:
        raise InstanceError(problems)

    for x, u in ((x, u) for x, acts in enumerate(admissible) for u in acts):
        transition[x, u] = transition[x, u] / math.fsum(transition[x, u])

    return MdpInstance(
        states=states,
        actions=actions,
        embedding=_frozen(embedding),
        admissible=tuple(admissible),
        transition=_frozen(transition),
        stage_cost=_frozen(stage_cost),
        constraint_cost=_frozen(constraint_cost),
        horizon=int(horizon),
        risk=risk,
    )


def _read_cost(mat, field, states, actions, admissible, problems) -> np.ndarray:
    n_s, n_u = len(states), len(actions)
    out = np.full((n_s, n_u), np.nan)
    if not isinstance(mat, Sequence) or len(mat) != n_s:
        problems.append(f"{field} must be a {n_s}x{n_u} matrix")
        return out
    for x in range(n_s):
        row = mat[x]
        if not isinstance(row, Sequence) or len(row) != n_u:
            problems.append(f"{field} row for x={states[x]} must have {n_u} entries")
            continue
        for u in admissible[x]:
            v = row[u]
            if v is None:
                problems.append(f"missing cost {field} at (x={states[x]},u={actions[u]})")
            elif not _is_number(v) or not math.isfinite(v):
                problems.append(f"{field} at (x={states[x]},u={actions[u]}) must be a finite number")
            else:
                out[x, u] = float(v)
    return out


def _check_validated(inst: MdpInstance) -> list[str]:
    problems = []
    if inst.horizon < 1:
        problems.append("horizon must be >= 1")
    problems.extend(inst.risk.problems())
    for x, acts in enumerate(inst.admissible):
        if not acts:
            problems.append(f"admissible set empty at x={inst.states[x]}")
    for x, u in inst.pairs():
        row = inst.transition[x, u]
        if (row < 0).any() or abs(math.fsum(row) - 1.0) > ROW_SUM_TOL:
            problems.append(f"invalid transition row at (x={inst.states[x]},u={inst.actions[u]})")
        if math.isnan(inst.stage_cost[x, u]) or math.isnan(inst.constraint_cost[x, u]):
            problems.append(f"missing cost at (x={inst.states[x]},u={inst.actions[u]})")
        elif inst.constraint_cost[x, u] < 0:
            problems.append(f"negative constraint cost at (x={inst.states[x]},u={inst.actions[u]})")
    return problems


def load_instance(path: str | Path) -> MdpInstance:
    """Parse and validate an instance file."""
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceError([f"{path}: not valid JSON ({exc})"]) from None
    return validate_instance(raw)


def instance_from_arrays(
    c,
    d,
    Q,
    horizon: int,
    risk: RiskSpec | None = None,
    admissible: Sequence[Sequence[int]] | None = None,
    embedding: Sequence[float] | None = None,
    state_names: Sequence[str] | None = None,
    action_names: Sequence[str] | None = None,
) -> MdpInstance:
    """Build and validate an instance from arrays.

    ``c`` and ``d`` have shape ``(|S|, |U|)``; ``Q`` has shape
    ``(|S|, |U|, |S|)`` with ``Q[x, u, y]`` the probability of moving from
    ``x`` to ``y`` under ``u``.
    """
    c = np.asarray(c, dtype=float)
    d = np.asarray(d, dtype=float)
    Q = np.asarray(Q, dtype=float)
    n_s, n_u = c.shape
    states = list(state_names) if state_names else [str(i + 1) for i in range(n_s)]
    actions = list(action_names) if action_names else [str(i + 1) for i in range(n_u)]
    emb = list(embedding) if embedding is not None else [float(i + 1) for i in range(n_u)]
    adm = admissible if admissible is not None else [range(n_u)] * n_s

    def matrix(arr):
        return [
            [float(arr[x, u]) if u in adm[x] else None for u in range(n_u)] for x in range(n_s)
        ]

    raw = {
        "states": states,
        "actions": [{"name": a, "embedding": e} for a, e in zip(actions, emb)],
        "admissible": {states[x]: [actions[u] for u in adm[x]] for x in range(n_s)},
        "Q": {actions[u]: Q[:, u, :].tolist() for u in range(n_u)},
        "c": matrix(c),
        "d": matrix(d),
        "horizon": int(horizon),
        "risk": (risk or RiskSpec()).to_dict(),
    }
    return validate_instance(raw)


def compute_lipschitz_constants(instance: MdpInstance) -> tuple[float, float, float]:
    """Tightest Lipschitz constants of c, d and Q with respect to the action embedding.

    Returns ``(M_c, M_d, M_q)``, each the largest difference quotient over all
    states and distinct admissible action pairs (0 when no pair exists).
    """
    m_c = m_d = m_q = 0.0
    emb = instance.embedding
    for x, acts in enumerate(instance.admissible):
        for i, u in enumerate(acts):
            for v in acts[i + 1 :]:
                gap = abs(emb[u] - emb[v])
                if gap == 0.0:
                    raise ValueError(
                        f"actions {instance.actions[u]} and {instance.actions[v]} share an "
                        f"embedding at x={instance.states[x]}"
                    )
                m_c = max(m_c, abs(instance.stage_cost[x, u] - instance.stage_cost[x, v]) / gap)
                m_d = max(
                    m_d, abs(instance.constraint_cost[x, u] - instance.constraint_cost[x, v]) / gap
                )
                l1 = math.fsum(abs(instance.transition[x, u] - instance.transition[x, v]))
                m_q = max(m_q, l1 / gap)
    return m_c, m_d, m_q


def c_max(instance: MdpInstance) -> float:
    """Largest absolute stage cost over admissible pairs."""
    return max((abs(float(instance.stage_cost[x, u])) for x, u in instance.pairs()), default=0.0)


def rho_max(instance: MdpInstance) -> float:
    """Largest constraint cost over admissible pairs; caps the one-stage risk."""
    return max((float(instance.constraint_cost[x, u]) for x, u in instance.pairs()), default=0.0)


def sensitivity_sequence(m_c: float, m_q: float, cmax: float, m_r: float, horizon: int) -> tuple[float, ...]:
    """Value-sensitivity constants ``M_V[k]`` for ``k = 0..horizon``.

    ``M_V[N] = 0`` and ``M_V[k] = (M_c + M_q (N-k-1) c_max + M_V[k+1]) M_r``.
    """
    out = [0.0] * (horizon + 1)
    for k in range(horizon - 1, -1, -1):
        out[k] = (m_c + m_q * (horizon - k - 1) * cmax + out[k + 1]) * m_r
    return tuple(out)


DEFAULT_M_R = 1.0 - 1e-6


@dataclass(frozen=True)
class ConstantsBundle:
    """Lipschitz and sensitivity constants feeding the a-priori error bound.

    ``M_r`` cannot be computed from the instance; it is supplied by the user.
    """

    M_c: float
    M_d: float
    M_q: float
    M_r: float
    c_max: float
    M_V: tuple[float, ...]

    @classmethod
    def from_instance(cls, instance: MdpInstance, m_r: float = DEFAULT_M_R) -> "ConstantsBundle":
        if m_r < 0 or not math.isfinite(m_r):
            raise ValueError(f"M_r must be a finite nonnegative number, got {m_r}")
        m_c, m_d, m_q = compute_lipschitz_constants(instance)
        cm = c_max(instance)
        return cls(m_c, m_d, m_q, float(m_r), cm, sensitivity_sequence(m_c, m_q, cm, m_r, instance.horizon))

    def to_dict(self) -> dict[str, Any]:
        return {
            "M_c": self.M_c,
            "M_d": self.M_d,
            "M_q": self.M_q,
            "M_r": self.M_r,
            "c_max": self.c_max,
            "M_V": list(self.M_V),
        }
