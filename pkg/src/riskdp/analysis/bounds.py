"""A-priori error bound for the discretized value function."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..instance import ConstantsBundle, sensitivity_sequence

CLOSED_FORM_TOL = 1e-9


@dataclass(frozen=True)
class ErrorBoundReport:
    """Bound on ``max |V^D_k - V_k|`` for a grid of step ``delta``.

    ``total`` comes from the sensitivity recursion and is authoritative.
    ``closed_form`` is its geometric-series sum (``None`` when
    ``M_r == 1``). ``stated_form`` evaluates the textbook expression
    literally; it is known to disagree with the recursion and is reported
    only for auditing.
    """

    delta: float
    M_V: tuple[float, ...]
    stage_bounds: tuple[float, ...]
    total: float
    closed_form: float | None
    closed_form_valid: bool
    stated_form: float | None
    stated_form_agrees: bool | None
    M_r: float

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "M_r": self.M_r,
            "M_V": list(self.M_V),
            "stage_bounds": list(self.stage_bounds),
            "total": self.total,
            "closed_form": self.closed_form,
            "closed_form_valid": self.closed_form_valid,
            "stated_form": self.stated_form,
            "stated_form_agrees": self.stated_form_agrees,
            "caveat": "M_r is user-supplied; the bound is only as trustworthy as M_r",
        }


def closed_form_total(m_c: float, m_q: float, cmax: float, m_r: float, horizon: int, delta: float) -> float:
    """``2 * delta * sum_k M_V[k]`` summed in closed form; requires ``m_r != 1``.

    With ``a = M_c``, ``b = M_q c_max``, ``rho = M_r`` and
    ``G = N - rho (1 - rho^N) / (1 - rho)``::

        sum_k M_V[k] = a rho G / (1 - rho) + b rho N (N + 1) / (2 (1 - rho))
                       - b rho G / (1 - rho)^2
    """
    a, b, rho, n = m_c, m_q * cmax, m_r, horizon
    g = n - rho * (1 - rho**n) / (1 - rho)
    s = a * rho * g / (1 - rho) + b * rho * n * (n + 1) / (2 * (1 - rho)) - b * rho * g / (1 - rho) ** 2
    return 2 * delta * s


def stated_closed_form(m_c: float, m_q: float, cmax: float, m_r: float, horizon: int, delta: float) -> float:
    """The commonly quoted closed-form bound, evaluated verbatim."""
    a, b, rho, n = m_c, m_q * cmax, m_r, horizon
    t1 = (rho * b - a * (1 - rho)) * (1 - rho**n) / (1 - rho) ** 3
    t2 = n * (n - 1) * rho * b / (2 * (1 - rho))
    t3 = n * (a * (1 - rho) - b * rho) / (1 - rho) ** 2
    return 2 * delta * (t1 + t2 + t3)


def compute_error_bound(constants: ConstantsBundle, delta: float, horizon: int) -> ErrorBoundReport:
    values = (constants.M_c, constants.M_q, constants.c_max, constants.M_r, delta)
    if any(v < 0 or not math.isfinite(v) for v in values):
        raise ValueError("error-bound inputs must be finite and nonnegative")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    mv = sensitivity_sequence(constants.M_c, constants.M_q, constants.c_max, constants.M_r, horizon)
    stage = tuple((mv[k] + mv[k + 1]) * delta for k in range(horizon))
    total = 2 * delta * math.fsum(mv[:horizon])
    valid = abs(1 - constants.M_r) > CLOSED_FORM_TOL
    closed = stated = agrees = None
    if valid:
        args = (constants.M_c, constants.M_q, constants.c_max, constants.M_r, horizon, delta)
        closed = closed_form_total(*args)
        stated = stated_closed_form(*args)
        agrees = bool(abs(stated - total) <= CLOSED_FORM_TOL * max(1.0, abs(total)))
    return ErrorBoundReport(delta, mv, stage, total, closed, valid, stated, agrees, constants.M_r)
