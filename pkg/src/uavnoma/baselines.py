"""Position-search oracle and benchmark schemes (fixed deployment, FDMA).

The optimal static deployment reduces to a 2-D search over positions with a
closed-form inner solve, so a dense grid plus derivative-free refinement
serves as the near-exhaustive reference ("oracle") the other schemes are
measured against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import channel, power
from .power import InfeasibleError
from .report import SolveResult, infeasible_result, jain_index, noma_result
from .scenario import Scenario

__all__ = [
    "SearchGrid",
    "grid_oracle",
    "solve_nfdp",
    "waterfill_floors",
    "fdma_user_rates",
    "solve_fdma",
]

# pattern search halves its step until at least this fine, so refined
# positions are resolved well below the 0.01 m contract
_MIN_REFINE_STEP = 0.002
_MAX_REFINE_EVALS = 50_000


@dataclass(frozen=True)
class SearchGrid:
    """Coarse grid plus refinement budget for the 2-D position search."""

    box: tuple[float, float, float, float] | None = None  # defaults to scenario.area
    coarse_step: float = 4.0
    refine_iters: int = 6

    def __post_init__(self):
        if self.coarse_step <= 0.0:
            raise ValueError("coarse_step must be > 0")
        if self.refine_iters < 0:
            raise ValueError("refine_iters must be >= 0")


def _resolve_box(scenario: Scenario, grid: SearchGrid) -> tuple[float, float, float, float]:
    if grid.box is None:
        return scenario.area
    box = tuple(float(v) for v in grid.box)
    users = scenario.users
    if (
        box[0] > users[:, 0].min()
        or box[1] > users[:, 1].min()
        or box[2] < users[:, 0].max()
        or box[3] < users[:, 1].max()
    ):
        raise ValueError("search box must contain the users' bounding box")
    return box


def _grid_points(box, step: float) -> np.ndarray:
    xs = np.arange(box[0], box[2] + 0.5 * step, step)
    ys = np.arange(box[1], box[3] + 0.5 * step, step)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def _pattern_refine(objective, start, start_value, box, step0, refine_iters):
    """Compass pattern search (maximization) with step halving.

    ``objective`` returns -inf for infeasible positions, so the search walks
    only through feasible territory and never returns worse than its start.
    """
    x = np.asarray(start, dtype=float).copy()
    best = start_value
    step = float(step0)
    target = min(step0 / 2.0**refine_iters, 0.5 * _MIN_REFINE_STEP * 2.0)
    target = max(target, 1e-12)
    evals = 0
    while step > target and evals < _MAX_REFINE_EVALS:
        moved = False
        for dx, dy in ((step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)):
            cand = np.array(
                [
                    min(max(x[0] + dx, box[0]), box[2]),
                    min(max(x[1] + dy, box[1]), box[3]),
                ]
            )
            value = objective(cand)
            evals += 1
            if value > best:
                best = value
                x = cand
                moved = True
        if not moved:
            step *= 0.5
    return x, best, evals


def _closed_form_objective(scenario: Scenario):
    def objective(pos):
        g = channel.gains(scenario, pos)
        if not power.feasibility(g, scenario.p_max, scenario.r_star).feasible:
            return -np.inf
        p = power.closed_form_power(g, scenario.p_max, scenario.r_star)
        return channel.sum_rate(g, p)

    return objective


def _coarse_noma_surface(scenario: Scenario, points: np.ndarray):
    """Vectorized closed-form sum rate over many candidate positions."""
    offsets = points[:, None, :] - scenario.users[None, :, :]
    d2 = scenario.altitude_h**2 + np.einsum("nmk,nmk->nm", offsets, offsets)
    g = np.sort(scenario.gamma0 / d2, axis=1)  # ascending gains per point
    m = scenario.num_users
    two_r = 2.0**scenario.r_star
    weights = (two_r - 1.0) * two_r ** np.arange(m)
    lhs = (weights / g).sum(axis=1)
    feasible = lhs <= scenario.p_max
    partial = lhs - weights[-1] / g[:, -1]
    p_last = scenario.p_max - partial
    objective = (two_r ** (m - 1) - 1.0) + p_last * g[:, -1]
    rates = np.where(feasible, np.log2(np.maximum(1.0 + objective, 1e-300)), -np.inf)
    return rates, feasible


def grid_oracle(scenario: Scenario, grid: SearchGrid | None = None) -> SolveResult:
    """Near-exhaustive 2-D position search with the closed-form inner solve.

    Evaluates every coarse grid point where the rate floor is supportable,
    then refines around the best one with a compass pattern search down to
    millimeter-scale steps.  Refinement never returns worse than the best
    coarse point.  Raises :class:`InfeasibleError` when no grid point is
    feasible.
    """
    grid = grid or SearchGrid()
    box = _resolve_box(scenario, grid)
    points = _grid_points(box, grid.coarse_step)
    rates, feasible = _coarse_noma_surface(scenario, points)
    if not feasible.any():
        raise InfeasibleError(
            "infeasible: no grid position supports the rate floor within the budget"
        )
    best_idx = int(np.argmax(rates))
    pos, _, evals = _pattern_refine(
        _closed_form_objective(scenario),
        points[best_idx],
        rates[best_idx],
        box,
        grid.coarse_step,
        grid.refine_iters,
    )
    g = channel.gains(scenario, pos)
    powers = power.closed_form_power(g, scenario.p_max, scenario.r_star)
    return noma_result(
        "oracle", scenario, pos, powers, converged=True, iterations=len(points) + evals
    )


def solve_nfdp(scenario: Scenario) -> SolveResult:
    """Fixed deployment at the users' geometric center, powers via the closed form."""
    center = scenario.users.mean(axis=0)
    g = channel.gains(scenario, center)
    if not power.feasibility(g, scenario.p_max, scenario.r_star).feasible:
        return infeasible_result("nfdp", scenario, position=center, iterations=1)
    powers = power.closed_form_power(g, scenario.p_max, scenario.r_star)
    return noma_result("nfdp", scenario, center, powers, converged=True, iterations=1)


def _fdma_floors(gain_values, m: int, r_star: float) -> np.ndarray:
    # minimum power for (1/M) log2(1 + M p h) >= r_star
    return (2.0 ** (m * r_star) - 1.0) / (m * np.asarray(gain_values, dtype=float))


def waterfill_floors(gain_values, p_max: float, r_star: float) -> np.ndarray:
    """Water-filling over per-user QoS floors for the FDMA benchmark.

    Maximizes ``sum_i (1/M) log2(1 + M p_i h_i)`` subject to the total budget
    and ``p_i >= floor_i``, where the floor is the minimum power meeting the
    rate threshold on a 1/M bandwidth share.  The water level is bracketed by
    bisection (to 1e-10) and then solved exactly on the identified clamp set,
    so unclamped users share one water level to machine precision.
    """
    g = np.asarray(gain_values, dtype=float)
    m = g.size
    floors = _fdma_floors(g, m, r_star)
    need = floors.sum()
    if need > p_max:
        raise InfeasibleError(
            "infeasible: FDMA QoS floors exceed the power budget "
            f"(needs {need:.6g} W of {p_max:.6g} W)",
            lhs=need,
            p_max=p_max,
        )
    inv = 1.0 / (m * g)

    def total(mu):
        return np.maximum(floors, mu - inv).sum()

    lo = 0.0
    hi = (p_max + inv.sum()) / m + float(floors.max()) + 1.0
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if total(mid) < p_max:
            lo = mid
        else:
            hi = mid
    mu = 0.5 * (lo + hi)

    clamped = floors >= mu - inv
    for _ in range(m + 1):
        free = ~clamped
        if not free.any():
            return floors.copy()
        mu = (p_max - floors[clamped].sum() + inv[free].sum()) / free.sum()
        violated = free & (mu - inv < floors)
        if not violated.any():
            break
        clamped |= violated
    p = np.where(clamped, floors, mu - inv)
    return p


def fdma_user_rates(gain_values, powers) -> np.ndarray:
    """Per-user FDMA rates on equal 1/M bandwidth shares: ``(1/M) log2(1 + M p h)``."""
    g = np.asarray(gain_values, dtype=float)
    p = np.asarray(powers, dtype=float)
    m = g.size
    return np.log2(1.0 + m * p * g) / m


def _fdma_surface(scenario: Scenario, points: np.ndarray):
    """Vectorized FDMA water-filling objective over candidate positions.

    Enumerates clamp sets (2^M of them) and picks, per point, the set whose
    exact water level is consistent; equivalent to per-point water-filling.
    """
    m = scenario.num_users
    offsets = points[:, None, :] - scenario.users[None, :, :]
    d2 = scenario.altitude_h**2 + np.einsum("nmk,nmk->nm", offsets, offsets)
    g = scenario.gamma0 / d2
    floors = _fdma_floors(g, m, scenario.r_star)
    inv = 1.0 / (m * g)
    feasible = floors.sum(axis=1) <= scenario.p_max

    n = points.shape[0]
    best = np.full(n, -np.inf)
    floor_rates = np.log2(1.0 + m * floors * g) / m
    level_at_floor = floors + inv  # water level at which a user unclamps
    for mask in range(2**m):
        clamp = np.array([(mask >> i) & 1 for i in range(m)], dtype=bool)
        free = ~clamp
        n_free = int(free.sum())
        if n_free == 0:
            rate = np.where(
                np.abs(floors.sum(axis=1) - scenario.p_max) <= 1e-12,
                floor_rates.sum(axis=1),
                -np.inf,
            )
        else:
            mu = (
                scenario.p_max - floors[:, clamp].sum(axis=1) + inv[:, free].sum(axis=1)
            ) / n_free
            ok = np.ones(n, dtype=bool)
            if clamp.any():
                ok &= (level_at_floor[:, clamp] >= mu[:, None] - 1e-12).all(axis=1)
            ok &= (level_at_floor[:, free] <= mu[:, None] + 1e-12).all(axis=1)
            rate = np.where(
                ok,
                floor_rates[:, clamp].sum(axis=1)
                + np.log2(np.maximum(m * mu[:, None] * g[:, free], 1.0)).sum(axis=1) / m,
                -np.inf,
            )
        best = np.maximum(best, rate)
    return np.where(feasible, best, -np.inf), feasible


def _fdma_objective(scenario: Scenario):
    def objective(pos):
        g = channel.gains(scenario, pos)
        try:
            p = waterfill_floors(g, scenario.p_max, scenario.r_star)
        except InfeasibleError:
            return -np.inf
        return float(fdma_user_rates(g, p).sum())

    return objective


def solve_fdma(scenario: Scenario, grid: SearchGrid | None = None) -> SolveResult:
    """FDMA benchmark: joint position search with water-filled powers.

    Same grid-plus-refinement search as :func:`grid_oracle`, with the inner
    solve replaced by :func:`waterfill_floors` and the orthogonal-access rate
    model ``(1/M) log2(1 + M p h)``.
    """
    grid = grid or SearchGrid()
    box = _resolve_box(scenario, grid)
    points = _grid_points(box, grid.coarse_step)
    rates, feasible = _fdma_surface(scenario, points)
    if not feasible.any():
        return infeasible_result("fdma", scenario, iterations=len(points))
    best_idx = int(np.argmax(rates))
    pos, _, evals = _pattern_refine(
        _fdma_objective(scenario),
        points[best_idx],
        rates[best_idx],
        box,
        grid.coarse_step,
        grid.refine_iters,
    )
    g = channel.gains(scenario, pos)
    powers = waterfill_floors(g, scenario.p_max, scenario.r_star)
    user_rates = fdma_user_rates(g, powers)
    return SolveResult(
        scheme="fdma",
        num_users=scenario.num_users,
        r_star=scenario.r_star,
        p_max=scenario.p_max,
        position=pos,
        powers=powers,
        rates=user_rates,
        sum_rate=float(user_rates.sum()),
        jain=jain_index(user_rates),
        feasible=True,
        converged=True,
        iterations=len(points) + evals,
    )
