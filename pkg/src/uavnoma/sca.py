"""Penalty-based successive convex approximation for joint deployment and power control.

The binary decoding order is relaxed to [0, 1] with a growing penalty on
non-binariness; every nonconvex constraint is replaced by a tangent
restriction at the current iterate and the resulting convex subproblem is
re-solved until the objective stalls (inner loop), while the penalty weight
grows until the order variables are driven back to binary (outer loop).
Initialization ramps the rate floor up from an easy value, re-solving and
carrying the deployment position forward, so the final solve starts feasible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np

from . import channel, power
from .low_complexity import best_candidate
from .power import InfeasibleError
from .report import SolveResult, noma_result
from .scenario import Scenario
from .subproblem import ScaState, build_subproblem, solve_subproblem

__all__ = [
    "ScaConfig",
    "TraceRow",
    "taylor_square",
    "taylor_exp",
    "initialize",
    "solve_njdp",
    "write_trace_csv",
]


@dataclass(frozen=True)
class ScaConfig:
    """Tuning knobs for the penalty/SCA solver and its initialization ramp."""

    lambda0: float = 0.1      # initial penalty weight
    c: float = 10.0           # penalty growth factor per outer pass
    eps1: float = 1e-4        # inner loop: fractional objective-increase threshold
    eps2: float = 1e-3        # outer loop: max penalty residual allowed as "binary"
    n0: int = 2               # clean outer passes required before stopping
    max_inner: int = 100
    max_outer: int = 30
    r0_star: Optional[float] = None   # ramp start; default min(0.1, 0.1 * r_star)
    n_ramp: int = 10                  # ramp steps from r0_star to r_star

    def __post_init__(self):
        if self.lambda0 <= 0 or self.eps1 <= 0 or self.eps2 <= 0:
            raise ValueError("lambda0, eps1, eps2 must be positive")
        if self.c <= 1.0:
            raise ValueError("penalty growth factor c must exceed 1")
        if self.n0 < 1 or self.max_inner < 1 or self.max_outer < 1 or self.n_ramp < 1:
            raise ValueError("iteration counts must be positive")
        if self.r0_star is not None and self.r0_star <= 0:
            raise ValueError("r0_star must be positive when given")


class TraceRow(NamedTuple):
    outer_idx: int
    inner_idx: int
    lam: float
    objective: float
    max_phi: float
    q_x: float
    q_y: float


def taylor_square(xbar: float):
    """Tangent of ``x^2`` at ``xbar``: a global under-estimator, tight at ``xbar``."""
    xbar = float(xbar)

    def affine(x):
        return xbar * xbar + 2.0 * xbar * (np.asarray(x, dtype=float) - xbar)

    return affine


def taylor_exp(vbar: float):
    """Tangent of ``e^v`` at ``vbar``: a global under-estimator, tight at ``vbar``."""
    evbar = math.exp(float(vbar))

    def affine(v):
        return evbar * (np.asarray(v, dtype=float) - float(vbar) + 1.0)

    return affine


def _tighten(scenario: Scenario, q, alpha, p, lam: float) -> ScaState:
    """Recompute all auxiliaries from (q, alpha, p) so every relaxed constraint
    holds with equality; the result is always a valid anchor."""
    q = np.asarray(q, dtype=float).reshape(2)
    alpha = np.clip(np.asarray(alpha, dtype=float), 0.0, 1.0)
    np.fill_diagonal(alpha, 0.0)
    p = np.asarray(p, dtype=float).copy()
    total = p.sum()
    if total > scenario.p_max:
        p *= scenario.p_max / total

    s = channel.squared_distances(scenario, q)
    z = np.log(scenario.gamma0 * p / s)
    y = alpha * (scenario.gamma0 * p / s)[None, :]
    np.fill_diagonal(y, 0.0)
    interference = y.sum(axis=1)
    v = np.log1p(interference)
    snr = (scenario.gamma0 * p / s) / (1.0 + interference)
    u = np.log2(1.0 + snr)
    # absorb solver round-off: a rate a hair under the floor is pinned to it
    near = (u < scenario.r_star) & (u > scenario.r_star - 1e-9)
    u[near] = scenario.r_star
    phi = alpha * (1.0 - alpha)
    np.fill_diagonal(phi, 0.0)
    return ScaState(q=q, alpha=alpha, p=p, s=s, u=u, v=v, y=y, z=z, phi=phi, lam=lam)


def _anchor_at(scenario: Scenario, q, lam: float) -> ScaState:
    """Feasible anchor at position ``q`` (or the best overhead fallback)."""
    q = np.asarray(q, dtype=float).reshape(2)
    g = channel.gains(scenario, q)
    if power.feasibility(g, scenario.p_max, scenario.r_star).feasible:
        p = power.closed_form_power(g, scenario.p_max, scenario.r_star)
    else:
        cand = best_candidate(scenario)
        if cand is None:
            raise InfeasibleError(
                "infeasible: no overhead position supports rate floor "
                f"{scenario.r_star:.6g} within the budget"
            )
        q, p = cand.position, cand.powers
    alpha = channel.decoding_order(scenario, q)
    return _tighten(scenario, q, alpha, p, lam)


def _algorithm1(scenario: Scenario, cfg: ScaConfig, state: ScaState, trace=None):
    """Double loop: inner SCA ascent at fixed penalty, outer penalty growth.

    Returns (final state, total inner iterations, converged flag).
    """
    lam = cfg.lambda0
    num_clean = 0
    total_inner = 0
    converged = False
    for outer in range(1, cfg.max_outer + 1):
        state = replace(state, lam=lam)
        current = state.objective()
        for inner in range(1, cfg.max_inner + 1):
            sub = build_subproblem(scenario, state)
            solution = solve_subproblem(sub)
            candidate = _tighten(scenario, solution.q, solution.alpha, solution.p, lam)
            total_inner += 1
            if candidate.objective() > current:
                state = candidate
            new = state.objective()
            if trace is not None:
                trace.append(
                    TraceRow(outer, inner, lam, new, state.max_phi(), state.q[0], state.q[1])
                )
            gain = (new - current) / max(abs(current), 1e-10)
            current = new
            if gain < cfg.eps1:
                break
        if state.max_phi() > cfg.eps2:
            lam *= cfg.c
        else:
            num_clean += 1
        if num_clean >= cfg.n0:
            converged = True
            break
    return state, total_inner, converged


def initialize(scenario: Scenario, cfg: ScaConfig | None = None) -> ScaState:
    """Build a feasible starting state for the penalty/SCA solver.

    Scans the M overhead positions at an easy rate floor and keeps the best,
    then ramps the floor up to the target in ``n_ramp`` steps, re-solving at
    each step and carrying the deployment position forward.  The returned
    state satisfies every relaxed constraint with equality at the target
    floor, so it is a valid subproblem anchor.

    Raises :class:`~uavnoma.power.InfeasibleError` when the floor is
    unreachable at every candidate along the ramp.
    """
    cfg = cfg or ScaConfig()
    r_target = scenario.r_star
    r0 = cfg.r0_star if cfg.r0_star is not None else min(0.1, 0.1 * r_target)
    r0 = min(r0, r_target)

    start = best_candidate(scenario, r0)
    if start is None:
        raise InfeasibleError(
            f"infeasible: no overhead position supports the ramp start floor {r0:.6g}"
        )
    q0 = start.position
    step = (r_target - r0) / cfg.n_ramp
    for k in range(1, cfg.n_ramp):
        r_temp = r0 + k * step
        scn_k = replace(scenario, r_star=r_temp)
        anchor = _anchor_at(scn_k, q0, cfg.lambda0)
        state, _, _ = _algorithm1(scn_k, cfg, anchor)
        q0 = state.q
    return _anchor_at(scenario, q0, cfg.lambda0)


def _rounded_order(scenario: Scenario, state: ScaState) -> np.ndarray:
    """Round the relaxed order to binary; re-derive from distances if the
    rounding breaks completeness or distance consistency."""
    alpha = np.rint(state.alpha)
    np.fill_diagonal(alpha, 0.0)
    m = alpha.shape[0]
    off = ~np.eye(m, dtype=bool)
    d2 = channel.squared_distances(scenario, state.q)
    consistent = np.all(np.abs((alpha + alpha.T)[off] - 1.0) < 0.5) and not np.any(
        (alpha * d2[:, None] > d2[None, :] + 1e-9 * d2.max())[off]
    )
    if not consistent:
        return channel.decoding_order(scenario, state.q)
    return alpha


def solve_njdp(
    scenario: Scenario, cfg: ScaConfig | None = None, collect_trace: bool = False
) -> SolveResult:
    """Joint deployment + power control ("njdp") via penalty SCA.

    Runs the initialization ramp, then the double loop at the target rate
    floor.  The reported powers are re-solved in closed form at the final
    position (and the rates recomputed exactly), so the QoS floor holds
    without relaxation error; the deployment position is the best of the SCA
    result, its starting point, and the overhead-scan choice.

    Non-convergence within the iteration caps is reported through
    ``converged=False`` on the best iterate; an unreachable rate floor raises
    :class:`~uavnoma.power.InfeasibleError`.
    """
    cfg = cfg or ScaConfig()
    state0 = initialize(scenario, cfg)
    trace: Optional[list] = [] if collect_trace else None
    state, total_inner, converged = _algorithm1(scenario, cfg, state0, trace)

    rounded = _rounded_order(scenario, state)
    binary_gap = float(np.abs(state.alpha - rounded).max()) if rounded.size else 0.0
    converged = converged and state.max_phi() <= cfg.eps2 and binary_gap <= cfg.eps2

    candidates = [state.q, state0.q]
    scan = best_candidate(scenario)
    if scan is not None:
        candidates.append(scan.position)
    best_pos, best_rate = None, -np.inf
    for pos in candidates:
        g = channel.gains(scenario, pos)
        if not power.feasibility(g, scenario.p_max, scenario.r_star).feasible:
            continue
        rate = channel.sum_rate(g, power.closed_form_power(g, scenario.p_max, scenario.r_star))
        if rate > best_rate:
            best_pos, best_rate = pos, rate
    if best_pos is None:
        raise InfeasibleError(
            "infeasible: rate floor unreachable at every candidate deployment position"
        )

    g = channel.gains(scenario, best_pos)
    powers = power.closed_form_power(g, scenario.p_max, scenario.r_star)
    result = noma_result(
        "njdp", scenario, best_pos, powers, converged=converged, iterations=total_inner
    )
    result.trace = trace
    return result


def write_trace_csv(trace, path) -> None:
    """Dump per-inner-iteration solver progress as CSV."""
    lines = ["outer_idx,inner_idx,lambda,objective,max_phi,q_x,q_y"]
    for row in trace:
        lines.append(
            f"{row.outer_idx},{row.inner_idx},{row.lam:.12g},{row.objective:.12g},"
            f"{row.max_phi:.12g},{row.q_x:.12g},{row.q_y:.12g}"
        )
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
