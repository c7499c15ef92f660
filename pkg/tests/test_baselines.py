import dataclasses

import numpy as np
import pytest

from uavnoma import (
    InfeasibleError,
    Scenario,
    SearchGrid,
    fdma_user_rates,
    gains,
    grid_oracle,
    solve_fdma,
    solve_lowcx,
    solve_nfdp,
    waterfill_floors,
)


def test_oracle_single_user_finds_overhead_point():
    scn = Scenario(users=np.array([[50.0, 50.0]]), area=(0, 0, 100, 100))
    res = grid_oracle(scn)
    assert np.linalg.norm(res.position - [50.0, 50.0]) <= 0.01
    assert res.sum_rate == pytest.approx(np.log2(1 + 1e6 / 1e4), abs=1e-6)


def test_oracle_small_floor_sits_over_a_user(reference_scenario):
    scn = dataclasses.replace(reference_scenario, r_star=1e-6)
    res = grid_oracle(scn)
    best = solve_lowcx(scn)
    dist = np.linalg.norm(res.position - best.position)
    assert dist <= SearchGrid().coarse_step
    assert res.sum_rate >= best.sum_rate - 1e-9


def test_oracle_finer_grid_never_worse(reference_scenario):
    coarse = grid_oracle(reference_scenario, SearchGrid(coarse_step=4.0))
    fine = grid_oracle(reference_scenario, SearchGrid(coarse_step=2.0))
    assert fine.sum_rate >= coarse.sum_rate - 1e-9


def test_oracle_dominates_heuristics(reference_scenario):
    oracle = grid_oracle(reference_scenario)
    assert oracle.sum_rate >= solve_lowcx(reference_scenario).sum_rate - 1e-6
    assert oracle.sum_rate >= solve_nfdp(reference_scenario).sum_rate - 1e-6


def test_oracle_infeasible_raises(reference_scenario):
    scn = dataclasses.replace(reference_scenario, r_star=3.0)
    with pytest.raises(InfeasibleError):
        grid_oracle(scn)


def test_nfdp_square_centroid():
    users = np.array([[10.0, 10.0], [-10.0, 10.0], [-10.0, -10.0], [10.0, -10.0]])
    scn = Scenario(users=users, area=(-100, -100, 100, 100))
    res = solve_nfdp(scn)
    np.testing.assert_allclose(res.position, [0.0, 0.0], atol=1e-12)


def test_nfdp_single_user_matches_oracle():
    scn = Scenario(users=np.array([[20.0, 30.0]]), area=(-100, -100, 100, 100))
    a = solve_nfdp(scn)
    b = solve_lowcx(scn)
    c = grid_oracle(scn)
    assert a.sum_rate == pytest.approx(b.sum_rate, abs=1e-9)
    assert a.sum_rate == pytest.approx(c.sum_rate, abs=1e-6)


def test_nfdp_below_oracle(reference_scenario):
    assert solve_nfdp(reference_scenario).sum_rate <= grid_oracle(reference_scenario).sum_rate


# ---------------------------------------------------------------- water-filling


def test_waterfill_equal_gains_split_evenly():
    p = waterfill_floors([50.0, 50.0], p_max=1.0, r_star=1e-9)
    np.testing.assert_allclose(p, [0.5, 0.5], atol=1e-8)


def test_waterfill_two_user_water_level():
    # 2 mu - (1/200 + 1/160) = 1  =>  p = (mu - 1/200, mu - 1/160)
    p = waterfill_floors([100.0, 80.0], p_max=1.0, r_star=1e-12)
    np.testing.assert_allclose(p, [0.500625, 0.499375], atol=1e-8)


def test_waterfill_clamped_user_stays_at_floor():
    g = np.array([100.0, 1.0])  # weak user's floor exceeds the shared water level
    r = 0.6
    p = waterfill_floors(g, p_max=1.0, r_star=r)
    m = 2
    floors = (2.0 ** (m * r) - 1.0) / (m * g)
    assert p[1] == pytest.approx(floors[1], abs=1e-12)
    assert p[0] == pytest.approx(1.0 - floors[1], abs=1e-10)
    assert p.sum() == pytest.approx(1.0, abs=1e-10)


def test_waterfill_budget_and_floors_hold():
    rng = np.random.default_rng(33)
    for _ in range(100):
        m = int(rng.integers(1, 6))
        g = rng.uniform(2.0, 200.0, size=m)
        r = float(rng.uniform(0.01, 0.4))
        floors = (2.0 ** (m * r) - 1.0) / (m * g)
        if floors.sum() > 1.0:
            with pytest.raises(InfeasibleError):
                waterfill_floors(g, 1.0, r)
            continue
        p = waterfill_floors(g, 1.0, r)
        assert p.sum() == pytest.approx(1.0, abs=1e-9)
        assert np.all(p >= floors - 1e-12)
        # KKT stationarity: unclamped users share one marginal utility
        marg = g / (1.0 + m * p * g)
        free = p > floors + 1e-9
        if free.sum() > 1:
            mvals = marg[free]
            assert np.max(np.abs(mvals - mvals[0])) <= 1e-8 * np.abs(mvals[0])


def test_waterfill_infeasible_floors():
    with pytest.raises(InfeasibleError):
        waterfill_floors([1.0, 1.0], p_max=0.1, r_star=2.0)


# ---------------------------------------------------------------- FDMA solver


def test_fdma_single_user_equals_noma():
    scn = Scenario(users=np.array([[20.0, 30.0]]), area=(-100, -100, 100, 100))
    fdma = solve_fdma(scn)
    noma = grid_oracle(scn)
    assert fdma.sum_rate == pytest.approx(noma.sum_rate, abs=1e-6)


def test_fdma_symmetric_large_floor_centers():
    users = np.array([[80.0, 0.0], [-80.0, 0.0], [0.0, 80.0], [0.0, -80.0]])
    scn = Scenario(users=users, r_star=0.8, area=(-200, -200, 200, 200))
    res = solve_fdma(scn)
    assert np.linalg.norm(res.position) <= 1.0


def test_fdma_below_noma_on_reference(reference_scenario):
    for r in (0.1, 0.5, 1.0):
        scn = dataclasses.replace(reference_scenario, r_star=r)
        fdma = solve_fdma(scn)
        njdp_like = grid_oracle(scn)
        assert fdma.sum_rate <= njdp_like.sum_rate + 1e-9


def test_fdma_rates_meet_floor(reference_scenario):
    res = solve_fdma(reference_scenario)
    assert np.all(res.rates >= reference_scenario.r_star - 1e-9)
    assert res.powers.sum() <= reference_scenario.p_max + 1e-9


def test_fdma_surface_matches_scalar_waterfill(reference_scenario):
    # the vectorized clamp-set search must agree with the scalar solver
    rng = np.random.default_rng(9)
    from uavnoma.baselines import _fdma_surface

    for r in (0.2, 0.9):
        scn = dataclasses.replace(reference_scenario, r_star=r)
        pts = rng.uniform(50, 350, size=(40, 2))
        surface, feasible = _fdma_surface(scn, pts)
        for k in range(len(pts)):
            g = gains(scn, pts[k])
            try:
                p = waterfill_floors(g, scn.p_max, scn.r_star)
                expected = float(fdma_user_rates(g, p).sum())
            except InfeasibleError:
                expected = -np.inf
            if expected == -np.inf:
                assert not feasible[k]
            else:
                assert surface[k] == pytest.approx(expected, abs=1e-9)
