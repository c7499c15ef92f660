"""Overhead-candidate heuristic: best closed-form solution over the M user positions.

Placing the UAV directly above a user maximizes that user's channel; since
the optimal power policy funnels all spare budget to the strongest channel,
scanning the M overhead positions and keeping the best closed-form solution
is a cheap approximation of the full joint deployment problem.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import channel, power
from .report import SolveResult, infeasible_result, noma_result
from .scenario import Scenario

__all__ = ["CandidateEvaluation", "evaluate_candidates", "best_candidate", "solve_lowcx"]


@dataclass(frozen=True)
class CandidateEvaluation:
    """Closed-form solution with the UAV directly above one user."""

    user_index: int
    position: np.ndarray
    powers: Optional[np.ndarray]   # None when the rate floor is unreachable here
    sum_rate: float                # -inf when infeasible

    @property
    def feasible(self) -> bool:
        return self.powers is not None


def evaluate_candidates(scenario: Scenario, r_star: float | None = None) -> list[CandidateEvaluation]:
    """Evaluate the closed-form power solution above each user in turn."""
    r = scenario.r_star if r_star is None else r_star
    out = []
    for i, pos in enumerate(scenario.users):
        g = channel.gains(scenario, pos)
        if power.feasibility(g, scenario.p_max, r).feasible:
            p = power.closed_form_power(g, scenario.p_max, r)
            out.append(CandidateEvaluation(i, pos.copy(), p, channel.sum_rate(g, p)))
        else:
            out.append(CandidateEvaluation(i, pos.copy(), None, -np.inf))
    return out


def best_candidate(scenario: Scenario, r_star: float | None = None) -> Optional[CandidateEvaluation]:
    """Highest sum-rate feasible candidate (ties to the lowest user index)."""
    best = None
    for cand in evaluate_candidates(scenario, r_star):
        if cand.feasible and (best is None or cand.sum_rate > best.sum_rate):
            best = cand
    return best


def solve_lowcx(scenario: Scenario) -> SolveResult:
    """Low-complexity scheme ("nlc"): best overhead candidate, closed-form powers.

    Always runs exactly M feasibility evaluations; returns an infeasible
    result (rather than raising) when no candidate supports the rate floor.
    """
    best = best_candidate(scenario)
    if best is None:
        return infeasible_result("nlc", scenario, iterations=scenario.num_users)
    return noma_result(
        "nlc",
        scenario,
        best.position,
        best.powers,
        converged=True,
        iterations=scenario.num_users,
    )
