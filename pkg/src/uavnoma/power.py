"""Optimal power control at a fixed UAV position.

For a fixed position the sum-rate problem under per-user rate floors is a
linear program whose KKT conditions admit a closed-form solution: every user
except the strongest transmits just enough to hit the rate floor ``r_star``,
and all remaining budget goes to the strongest channel.  This module provides
that closed form, the matching feasibility condition, the largest supportable
rate floor, and an independent vertex-enumeration LP solver used to
cross-check the closed form in tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .channel import ascending_gain_order, gains

__all__ = [
    "InfeasibleError",
    "FeasibilityReport",
    "qos_power_requirement",
    "feasibility",
    "closed_form_power",
    "lp_oracle",
    "r_star_max",
    "max_supported_rate",
]


class InfeasibleError(RuntimeError):
    """The rate floor cannot be met within the power budget."""

    def __init__(self, message: str, lhs: float | None = None, p_max: float | None = None):
        super().__init__(message)
        self.lhs = lhs
        self.p_max = p_max

    @property
    def margin(self) -> float | None:
        if self.lhs is None or self.p_max is None:
            return None
        return self.p_max - self.lhs


@dataclass(frozen=True)
class FeasibilityReport:
    """Outcome of the budget test: total power needed to hit the floor everywhere."""

    feasible: bool
    lhs: float      # watts needed when every user's rate is pinned at r_star
    margin: float   # p_max - lhs


def _floor_weights(m: int, r_star: float) -> np.ndarray:
    # (2^r - 1) * 2^((i-1) r) for i = 1..m in ascending-gain order
    two_r = 2.0**r_star
    return (two_r - 1.0) * two_r ** np.arange(m)


def qos_power_requirement(gain_values, r_star: float) -> float:
    """Total power that pins every user's rate exactly at ``r_star``.

    With gains sorted ascending, the floor powers telescope to
    ``(2^r - 1) * sum_i 2^((i-1) r) / h_(i)``; the budget is feasible exactly
    when this does not exceed ``p_max``.
    """
    g = np.asarray(gain_values, dtype=float)
    hs = g[ascending_gain_order(g)]
    return float(np.sum(_floor_weights(g.size, r_star) / hs))


def feasibility(gain_values, p_max: float, r_star: float) -> FeasibilityReport:
    """Test whether the rate floor ``r_star`` is supportable within ``p_max``."""
    lhs = qos_power_requirement(gain_values, r_star)
    return FeasibilityReport(feasible=lhs <= p_max, lhs=lhs, margin=p_max - lhs)


def closed_form_power(gain_values, p_max: float, r_star: float) -> np.ndarray:
    """Optimal transmit powers for a fixed position (indexed like ``gain_values``).

    In ascending-gain order user ``(i)`` gets ``(2^r - 1) 2^((i-1) r) / h_(i)``
    for ``i < M`` (rate exactly ``r_star``) and the strongest user receives the
    whole remaining budget, so the total is exactly ``p_max``.

    Raises :class:`InfeasibleError` when the floors alone exceed the budget.
    """
    g = np.asarray(gain_values, dtype=float)
    report = feasibility(g, p_max, r_star)
    if not report.feasible:
        raise InfeasibleError(
            "infeasible: QoS floor power requirement exceeds budget "
            f"(needs {report.lhs:.6g} W, margin {report.margin:.4g} W)",
            lhs=report.lhs,
            p_max=p_max,
        )
    order = ascending_gain_order(g)
    hs = g[order]
    p_sorted = _floor_weights(g.size, r_star) / hs
    p_sorted[-1] = p_max - p_sorted[:-1].sum()
    powers = np.empty_like(p_sorted)
    powers[order] = p_sorted
    return powers


def lp_oracle(gain_values, p_max: float, r_star: float) -> np.ndarray:
    """Solve the fixed-position power LP by exhaustive vertex enumeration.

    Enumerates every M-subset of active constraints among the budget row, the
    M nonnegativity rows and the M rate-floor rows, solves the corresponding
    linear systems, keeps feasible vertices and returns the one maximizing
    ``sum_i p_i h_i``.  Exponential in M, so restricted to M <= 6; intended
    purely as an independent check of :func:`closed_form_power`.
    """
    g = np.asarray(gain_values, dtype=float)
    m = g.size
    if m > 6:
        raise ValueError("lp_oracle enumerates vertices and is limited to M <= 6")
    order = ascending_gain_order(g)
    hs = g[order]
    two_r_minus_1 = 2.0**r_star - 1.0

    # rows of A x <= b over sorted powers x
    rows = [np.ones(m)]
    rhs = [p_max]
    for i in range(m):
        row = np.zeros(m)
        row[i] = -1.0
        rows.append(row)
        rhs.append(0.0)
    for i in range(m):
        # rate floor: h_i x_i >= (2^r - 1)(1 + sum_{j<i} h_j x_j)
        row = np.zeros(m)
        row[:i] = two_r_minus_1 * hs[:i]
        row[i] = -hs[i]
        rows.append(row)
        rhs.append(-two_r_minus_1)
    A = np.array(rows)
    b = np.array(rhs)
    row_scale = np.maximum(1.0, np.abs(A).sum(axis=1) * max(p_max, 1.0) + np.abs(b))

    best_obj = -np.inf
    best_x = None
    for active in combinations(range(A.shape[0]), m):
        sub = A[list(active)]
        try:
            x = np.linalg.solve(sub, b[list(active)])
        except np.linalg.LinAlgError:
            continue
        if not np.all(np.isfinite(x)):
            continue
        if np.any(A @ x - b > 1e-9 * row_scale):
            continue
        obj = float(hs @ x)
        if obj > best_obj + 1e-15:
            best_obj = obj
            best_x = x
    if best_x is None:
        raise InfeasibleError(
            "infeasible: the power polytope is empty at this rate floor",
            lhs=qos_power_requirement(g, r_star),
            p_max=p_max,
        )
    powers = np.empty(m)
    powers[order] = np.maximum(best_x, 0.0)
    return powers


def r_star_max(scenario, position, tol: float = 1e-9, max_iter: int = 200) -> float:
    """Largest rate floor supportable at ``position`` within the budget.

    The floor power requirement is strictly increasing in the rate, so the
    threshold is the unique root of ``requirement(r) = p_max``; found by
    bisection on ``[0, log2(1 + p_max * gamma0 / H^2)]`` to ``tol``.
    """
    g = gains(scenario, position)
    hi = float(np.log2(1.0 + scenario.p_max * scenario.gamma0 / scenario.altitude_h**2))
    lo = 0.0
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if qos_power_requirement(g, mid) <= scenario.p_max:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def max_supported_rate(scenario, tol: float = 1e-9) -> float:
    """Best rate-floor threshold over all directly-overhead candidate positions."""
    return max(r_star_max(scenario, q, tol=tol) for q in scenario.users)
