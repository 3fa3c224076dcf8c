"""Solve reports: a JSON document describing grids, tables, constants and bounds.

Numbers carry 12 significant digits and infinity is the string ``"inf"``.
Everything except the ``timing`` block is a deterministic function of the
instance file and the solve settings.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Any

from .analysis.bounds import ErrorBoundReport
from .instance import ConstantsBundle, MdpInstance
from .solver import PolicyTable, ValueTable


def number(v: float | None) -> Any:
    if v is None:
        return None
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return float(f"{v:.12g}")


def _clean(obj: Any) -> Any:
    if isinstance(obj, float):
        return number(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def build_solve_report(
    instance: MdpInstance,
    digest: str,
    settings: dict,
    values: ValueTable,
    policy: PolicyTable,
    constants: ConstantsBundle,
    bound: ErrorBoundReport,
    root: dict,
    timing: dict,
) -> dict:
    grids = values.grids
    grid_rows, value_rows, policy_rows = [], [], []
    for k in range(instance.horizon + 1):
        for x, state in enumerate(instance.states):
            g = grids[k, x]
            grid_rows.append({"stage": k, "state": state, **g.summary()})
            value_rows.append(
                {
                    "stage": k,
                    "state": state,
                    "thresholds": g.points.tolist(),
                    "values": values.at(k, x).tolist(),
                }
            )
            if k == instance.horizon:
                continue
            entries = []
            for i, r in enumerate(g.points):
                u = int(policy.actions[k][x][i])
                if u < 0:
                    entries.append({"threshold": float(r), "action": None, "next": None})
                    continue
                _, nxt = policy.decision(k, x, i)
                entries.append(
                    {
                        "threshold": float(r),
                        "action": instance.actions[u],
                        "next": {instance.states[y]: t for y, t in enumerate(nxt)},
                    }
                )
            policy_rows.append({"stage": k, "state": state, "entries": entries})
    report = {
        "instance": {"sha256": digest, "states": list(instance.states), "actions": list(instance.actions),
                     "horizon": instance.horizon, "risk": instance.risk.to_dict()},
        "settings": settings,
        "root": root,
        "grids": grid_rows,
        "values": value_rows,
        "policy": policy_rows,
        "constants": constants.to_dict(),
        "error_bound": bound.to_dict(),
        "timing": timing,
    }
    return _clean(report)


def dumps(report: dict) -> str:
    return json.dumps(report, indent=1) + "\n"
