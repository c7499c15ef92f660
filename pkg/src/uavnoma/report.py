"""Result records, the Jain fairness index, sweep orchestration, and CSV output."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import channel
from .scenario import Scenario, SweepSpec

__all__ = [
    "SolveResult",
    "SweepResult",
    "jain_index",
    "noma_result",
    "infeasible_result",
    "run_sweep",
    "emit_csv",
    "check_noma_trends",
]


@dataclass
class SolveResult:
    """Outcome of one scheme on one scenario.

    ``rates`` are always recomputed exactly from the reported position and
    powers (never taken from relaxed solver variables), so every CSV row is
    auditable against the rate formulas.
    """

    scheme: str
    num_users: int
    r_star: float
    p_max: float
    position: Optional[np.ndarray]
    powers: Optional[np.ndarray]
    rates: Optional[np.ndarray]
    sum_rate: float
    jain: float
    feasible: bool
    converged: bool
    iterations: int
    wall_time: float = 0.0
    trace: Optional[list] = field(default=None, repr=False, compare=False)


def jain_index(rates) -> float:
    """Fairness index ``(sum r)^2 / (M sum r^2)``; 1/M (one user served) to 1 (equal)."""
    r = np.asarray(rates, dtype=float)
    total_sq = float(np.sum(r * r))
    if total_sq <= 0.0:
        raise ValueError("jain_index requires at least one positive rate")
    return float(r.sum() ** 2 / (r.size * total_sq))


def noma_result(
    scheme: str,
    scenario: Scenario,
    position,
    powers,
    converged: bool = True,
    iterations: int = 1,
) -> SolveResult:
    """Assemble a result for a NOMA scheme, recomputing rates from scratch."""
    pos = np.asarray(position, dtype=float).reshape(2)
    p = np.asarray(powers, dtype=float)
    g = channel.gains(scenario, pos)
    order = channel.decoding_order(scenario, pos)
    rates = channel.user_rates(g, order, p)
    return SolveResult(
        scheme=scheme,
        num_users=scenario.num_users,
        r_star=scenario.r_star,
        p_max=scenario.p_max,
        position=pos,
        powers=p,
        rates=rates,
        sum_rate=channel.sum_rate(g, p),
        jain=jain_index(rates),
        feasible=True,
        converged=converged,
        iterations=iterations,
    )


def infeasible_result(
    scheme: str, scenario: Scenario, position=None, iterations: int = 0
) -> SolveResult:
    pos = None if position is None else np.asarray(position, dtype=float).reshape(2)
    return SolveResult(
        scheme=scheme,
        num_users=scenario.num_users,
        r_star=scenario.r_star,
        p_max=scenario.p_max,
        position=pos,
        powers=None,
        rates=None,
        sum_rate=float("nan"),
        jain=float("nan"),
        feasible=False,
        converged=False,
        iterations=iterations,
    )


@dataclass
class SweepResult:
    """One solver run per (scheme, axis value), scheme-major order."""

    variable: str
    values: np.ndarray
    schemes: tuple[str, ...]
    rows: list[SolveResult]

    def column(self, scheme: str, attr: str = "sum_rate") -> np.ndarray:
        return np.array([getattr(r, attr) for r in self.rows if r.scheme == scheme])


def _solver_for(scheme: str, cfg, grid):
    from . import baselines, low_complexity, sca

    if scheme == "njdp":
        return lambda scn: sca.solve_njdp(scn, cfg)
    if scheme == "nlc":
        return low_complexity.solve_lowcx
    if scheme == "nfdp":
        return baselines.solve_nfdp
    if scheme == "fdma":
        return lambda scn: baselines.solve_fdma(scn, grid)
    if scheme == "oracle":
        return lambda scn: baselines.grid_oracle(scn, grid)
    raise ValueError(f"unknown scheme '{scheme}'")


def run_sweep(scenario: Scenario, spec: SweepSpec, cfg=None, grid=None) -> SweepResult:
    """Evaluate each requested scheme at each axis value.

    Axis values override the corresponding scenario field.  Per-point
    infeasibility is recorded as a flagged row; the sweep never aborts.
    """
    from .power import InfeasibleError

    values = spec.values()
    rows: list[SolveResult] = []
    for scheme in spec.schemes:
        solver = _solver_for(scheme, cfg, grid)
        for value in values:
            scn = replace(scenario, **{spec.variable: float(value)})
            try:
                rows.append(solver(scn))
            except InfeasibleError:
                rows.append(infeasible_result(scheme, scn))
    return SweepResult(variable=spec.variable, values=values, schemes=spec.schemes, rows=rows)


def check_noma_trends(sweep: SweepResult, slack: float = 1e-9) -> list[str]:
    """Post-run trend validation on NOMA schemes; returns violation messages."""
    problems = []
    for scheme in sweep.schemes:
        if scheme == "fdma":
            continue
        col = sweep.column(scheme)
        if np.isnan(col).any():
            continue
        if sweep.variable == "r_star" and np.any(np.diff(col) > slack):
            problems.append(f"{scheme}: sum rate not non-increasing along the r_star sweep")
        if sweep.variable == "p_max" and np.any(np.diff(col) < -slack):
            problems.append(f"{scheme}: sum rate not non-decreasing along the p_max sweep")
    return problems


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if np.isnan(v):
        return "nan"
    return f"{v:.12g}"


def _result_row(result: SolveResult, m: int) -> list[str]:
    pos = result.position if result.position is not None else (np.nan, np.nan)
    powers = result.powers if result.powers is not None else np.full(m, np.nan)
    rates = result.rates if result.rates is not None else np.full(m, np.nan)
    cells = [result.scheme, _fmt(result.r_star), _fmt(result.p_max), _fmt(pos[0]), _fmt(pos[1])]
    cells += [_fmt(p) for p in powers]
    cells += [_fmt(r) for r in rates]
    cells += [
        _fmt(result.sum_rate),
        _fmt(result.jain),
        _fmt(result.feasible),
        _fmt(result.converged),
        _fmt(result.iterations),
        _fmt(result.wall_time),
    ]
    return cells


def emit_csv(result, path) -> None:
    """Write a solve or sweep result as CSV.

    Columns: scheme, r_star, p_max, pos_x, pos_y, p_1..p_M, r_1..r_M,
    sum_rate, jain, feasible, converged, iterations, wall_time_s.  Reals use
    12 significant digits; output is byte-stable for deterministic inputs.
    """
    rows = result.rows if isinstance(result, SweepResult) else [result]
    m = rows[0].num_users if rows else 0
    header = ["scheme", "r_star", "p_max", "pos_x", "pos_y"]
    header += [f"p_{i + 1}" for i in range(m)]
    header += [f"r_{i + 1}" for i in range(m)]
    header += ["sum_rate", "jain", "feasible", "converged", "iterations", "wall_time_s"]
    lines = [",".join(header)]
    lines += [",".join(_result_row(r, m)) for r in rows]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
