import dataclasses

import numpy as np
import pytest

from uavnoma import (
    Scenario,
    evaluate_candidates,
    grid_oracle,
    max_supported_rate,
    solve_lowcx,
)


def test_single_user_takes_whole_budget():
    scn = Scenario(users=np.array([[50.0, 50.0]]), area=(0, 0, 100, 100))
    res = solve_lowcx(scn)
    np.testing.assert_allclose(res.position, [50.0, 50.0])
    np.testing.assert_allclose(res.powers, [1.0])
    assert res.sum_rate == pytest.approx(np.log2(1 + 1e6 / 1e4))


def test_symmetric_tie_goes_to_first_user():
    scn = Scenario(users=np.array([[60.0, 0.0], [-60.0, 0.0]]), area=(-200, -200, 200, 200))
    res = solve_lowcx(scn)
    np.testing.assert_allclose(res.position, [60.0, 0.0])
    evals = evaluate_candidates(scn)
    assert evals[0].sum_rate == pytest.approx(evals[1].sum_rate, abs=1e-12)


def test_candidate_count_is_m(reference_scenario):
    evals = evaluate_candidates(reference_scenario)
    assert len(evals) == reference_scenario.num_users
    assert solve_lowcx(reference_scenario).iterations == reference_scenario.num_users


def test_deterministic(reference_scenario):
    a = solve_lowcx(reference_scenario)
    b = solve_lowcx(reference_scenario)
    np.testing.assert_array_equal(a.position, b.position)
    np.testing.assert_array_equal(a.powers, b.powers)
    assert a.sum_rate == b.sum_rate


def test_close_to_oracle_at_moderate_floor(reference_scenario):
    oracle = grid_oracle(reference_scenario)
    res = solve_lowcx(reference_scenario)
    assert res.sum_rate <= oracle.sum_rate + 1e-6
    assert res.sum_rate >= 0.95 * oracle.sum_rate


def test_dominated_by_oracle_random_instances():
    rng = np.random.default_rng(21)
    for _ in range(10):
        from uavnoma import generate_scenario

        scn = generate_scenario(seed=int(rng.integers(1_000_000)), m=int(rng.integers(2, 5)))
        scn = dataclasses.replace(scn, r_star=float(rng.uniform(0.1, 0.8)))
        res = solve_lowcx(scn)
        if not res.feasible:
            continue
        assert res.sum_rate <= grid_oracle(scn).sum_rate + 1e-6


def test_infeasible_floor_reports_not_raises(reference_scenario):
    too_high = max_supported_rate(reference_scenario) + 0.05
    scn = dataclasses.replace(reference_scenario, r_star=too_high)
    res = solve_lowcx(scn)
    assert not res.feasible
    assert res.powers is None


def test_rates_meet_floor(reference_scenario):
    res = solve_lowcx(reference_scenario)
    assert np.all(res.rates >= reference_scenario.r_star - 1e-6)
    assert res.powers.sum() <= reference_scenario.p_max + 1e-9
