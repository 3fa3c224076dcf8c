"""Grid-refinement sweeps of the root value."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

from ..instance import MdpInstance
from ..solver import SolveTimeout, value_iteration
from ..thresholds import build_grids
from .oracle import DEFAULT_LIMIT, OracleLimitExceeded, brute_force_optimum

CSV_COLUMNS = ("M", "delta", "value", "oracle_gap", "wall_ms")


@dataclass
class SweepRow:
    M: int
    delta: float
    value: float | None
    oracle_gap: float | None
    wall_ms: float
    status: str = "ok"


def sweep_grid_sizes(
    instance: MdpInstance,
    x0: int,
    r0: float,
    regions: Iterable[int],
    engine: str = "sweep",
    oracle_limit: int = DEFAULT_LIMIT,
    time_budget: float | None = None,
    epsilon: float | None = None,
    threads: int = 1,
) -> list[SweepRow]:
    """Solve at each region count and report the root value.

    ``delta`` is the largest grid step over all stages and states. The oracle
    gap is filled in when brute force is within ``oracle_limit``; a solve that
    overruns ``time_budget`` seconds is recorded with status ``timeout``.
    """
    try:
        oracle = brute_force_optimum(instance, x0, r0, oracle_limit).value
    except OracleLimitExceeded:
        oracle = None
    rows = []
    for m in sorted(regions):
        grids = build_grids(instance, m, epsilon)
        start = time.monotonic()
        deadline = None if time_budget is None else start + time_budget
        try:
            values, _ = value_iteration(instance, grids, engine=engine, threads=threads, deadline=deadline)
        except SolveTimeout:
            rows.append(SweepRow(m, grids.max_delta, None, None, (time.monotonic() - start) * 1e3, "timeout"))
            continue
        wall = (time.monotonic() - start) * 1e3
        v = values.query(x0, r0)
        gap = None
        if oracle is not None and math.isfinite(v) and math.isfinite(oracle):
            gap = v - oracle
        rows.append(SweepRow(m, grids.max_delta, v, gap, wall))
    return rows


def format_number(v: float | None) -> str:
    if v is None:
        return ""
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.12g}"


def write_csv(rows: Sequence[SweepRow], fh: TextIO) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        value = "timeout" if row.status == "timeout" else format_number(row.value)
        writer.writerow(
            [row.M, format_number(row.delta), value, format_number(row.oracle_gap), f"{row.wall_ms:.3f}"]
        )
