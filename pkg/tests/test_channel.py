import numpy as np
import pytest

from uavnoma import (
    Scenario,
    decoding_order,
    gains,
    generate_scenario,
    squared_distances,
    sum_rate,
    user_rates,
)

from conftest import random_powers


def scn_for(users, h=100.0):
    users = np.asarray(users, dtype=float)
    lo = users.min(axis=0) - 200
    hi = users.max(axis=0) + 200
    return Scenario(users=users, altitude_h=h, area=(lo[0], lo[1], hi[0], hi[1]))


def test_squared_distance_overhead():
    scn = scn_for([[0.0, 0.0]])
    assert squared_distances(scn, (0, 0))[0] == pytest.approx(10000.0)


def test_squared_distance_3_4_5():
    scn = scn_for([[30.0, 40.0]])
    assert squared_distances(scn, (0, 0))[0] == pytest.approx(12500.0)


def test_squared_distance_minimum_altitude():
    scn = scn_for([[0.0, 0.0]], h=1.0)
    assert squared_distances(scn, (0, 0))[0] == pytest.approx(1.0)


def test_gains_direct_substitution():
    scn = scn_for([[0.0, 0.0], [30.0, 40.0]])
    np.testing.assert_allclose(gains(scn, (0, 0)), [100.0, 80.0])


def test_equidistant_users_equal_gains():
    scn = scn_for([[10.0, 0.0], [-10.0, 0.0]])
    g = gains(scn, (0, 0))
    assert g[0] == g[1]


def test_decoding_order_closer_is_stronger():
    scn = scn_for([[0.0, 0.0], [30.0, 40.0]])
    alpha = decoding_order(scn, (0, 0))
    np.testing.assert_array_equal(alpha, [[0, 1], [0, 0]])


def test_decoding_order_tie_break_by_index():
    scn = scn_for([[10.0, 0.0], [-10.0, 0.0]])
    alpha = decoding_order(scn, (0, 0))
    np.testing.assert_array_equal(alpha, [[0, 1], [0, 0]])


def test_decoding_order_single_user():
    scn = scn_for([[5.0, 5.0]])
    np.testing.assert_array_equal(decoding_order(scn, (0, 0)), [[0]])


def test_user_rates_two_user_example():
    g = np.array([80.0, 100.0])
    alpha = np.array([[0.0, 0.0], [1.0, 0.0]])  # second user is the stronger one
    p = np.array([0.0125, 0.9875])
    rates = user_rates(g, alpha, p)
    assert rates[0] == pytest.approx(1.0, abs=1e-12)
    assert rates[1] == pytest.approx(np.log2(50.375), abs=1e-12)
    assert sum_rate(g, p) == pytest.approx(np.log2(100.75), abs=1e-12)
    assert rates.sum() == pytest.approx(sum_rate(g, p), abs=1e-9)


def test_zero_power_zero_rate():
    g = np.array([80.0, 100.0])
    alpha = np.array([[0.0, 1.0], [0.0, 0.0]])
    rates = user_rates(g, alpha, np.array([0.0, 0.5]))
    assert rates[0] == 0.0


def test_single_user_rate_interference_free():
    g = np.array([42.0])
    rates = user_rates(g, np.zeros((1, 1)), np.array([0.3]))
    assert rates[0] == pytest.approx(np.log2(1 + 0.3 * 42.0))
    assert rates[0] == pytest.approx(sum_rate(g, [0.3]))


def permutation_order(perm):
    """Decoding order induced by an arbitrary strength ranking."""
    m = len(perm)
    rank = np.empty(m, dtype=int)
    rank[list(perm)] = np.arange(m)
    alpha = (rank[:, None] < rank[None, :]).astype(float)
    np.fill_diagonal(alpha, 0.0)
    return alpha


def test_sum_rate_identity_random_instances():
    rng = np.random.default_rng(42)
    for trial in range(200):
        m = int(rng.integers(1, 6))
        scn = generate_scenario(seed=int(rng.integers(1_000_000)), m=m)
        pos = rng.uniform(0, 400, size=2)
        g = gains(scn, pos)
        p = random_powers(rng, m, scn.p_max)
        total = user_rates(g, decoding_order(scn, pos), p).sum()
        assert total == pytest.approx(sum_rate(g, p), abs=1e-9)
        # the telescoped total is the same for any complete decoding order
        perm = rng.permutation(m)
        total_perm = user_rates(g, permutation_order(perm), p).sum()
        assert total_perm == pytest.approx(sum_rate(g, p), abs=1e-9)


def test_gain_increases_toward_user():
    scn = scn_for([[100.0, 100.0], [300.0, 300.0]])
    g_far = gains(scn, (200, 200))
    g_near = gains(scn, (150, 150))
    assert g_near[0] > g_far[0]


def test_midpoint_convexity_log_exp():
    # log2(1 + e^(x - y)) is jointly convex in (x, y)
    rng = np.random.default_rng(7)
    a = rng.uniform(-10, 10, size=(10_000, 2))
    b = rng.uniform(-10, 10, size=(10_000, 2))

    def f(pts):
        return np.log2(1.0 + np.exp(pts[:, 0] - pts[:, 1]))

    mid = f((a + b) / 2.0)
    assert np.all(mid <= (f(a) + f(b)) / 2.0 + 1e-12)


def test_midpoint_convexity_quadratic_over_linear():
    # ||x - a||^2 / y is jointly convex in (x, y) for y > 0
    rng = np.random.default_rng(8)
    anchor = rng.uniform(-5, 5, size=2)
    xa = rng.uniform(-10, 10, size=(10_000, 2))
    xb = rng.uniform(-10, 10, size=(10_000, 2))
    ya = rng.uniform(0.1, 10, size=10_000)
    yb = rng.uniform(0.1, 10, size=10_000)

    def g(x, y):
        return ((x - anchor) ** 2).sum(axis=1) / y

    mid = g((xa + xb) / 2.0, (ya + yb) / 2.0)
    assert np.all(mid <= (g(xa, ya) + g(xb, yb)) / 2.0 + 1e-12)
