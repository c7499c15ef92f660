"""Line-of-sight channel geometry, SIC decoding order, and NOMA rate formulas."""

from __future__ import annotations

import numpy as np

__all__ = [
    "squared_distances",
    "gains",
    "ascending_gain_order",
    "decoding_order",
    "user_rates",
    "sum_rate",
]


def squared_distances(scenario, position) -> np.ndarray:
    """Squared user-to-UAV distances ``H^2 + ||q - q_i||^2`` (meters^2)."""
    pos = np.asarray(position, dtype=float).reshape(2)
    offsets = scenario.users - pos
    return scenario.altitude_h**2 + np.einsum("ij,ij->i", offsets, offsets)


def gains(scenario, position) -> np.ndarray:
    """Normalized channel gains ``gamma0 / (H^2 + ||q - q_i||^2)``, one per user.

    The gain is the per-watt SNR of each user: transmitting ``p`` watts from
    user ``i`` yields SNR ``p * gains[i]`` at the UAV.
    """
    return scenario.gamma0 / squared_distances(scenario, position)


def ascending_gain_order(gain_values) -> np.ndarray:
    """Indices sorting gains ascending (weakest channel first).

    Equal gains are broken by user index so that the lower index counts as
    the stronger channel, matching :func:`decoding_order`.
    """
    g = np.asarray(gain_values, dtype=float)
    return np.lexsort((-np.arange(g.size), g))


def decoding_order(scenario, position) -> np.ndarray:
    """SIC decoding-order matrix at the given UAV position.

    ``alpha[i, j] = 1`` means user ``j``'s signal is still unresolved
    interference while decoding user ``i``; this holds exactly when user
    ``i`` is closer to the UAV than user ``j`` (ties broken by lower index).
    """
    d2 = squared_distances(scenario, position)
    idx = np.arange(d2.size)
    closer = (d2[:, None] < d2[None, :]) | (
        (d2[:, None] == d2[None, :]) & (idx[:, None] < idx[None, :])
    )
    return closer.astype(float)


def user_rates(gain_values, order, powers) -> np.ndarray:
    """Per-user achievable rates in bits/s/Hz under SIC.

    ``rate_i = log2(1 + p_i h_i / (1 + sum_j alpha_ij h_j p_j))``.  Works for
    fractional ``order`` matrices as well (used by the relaxed solver).
    """
    g = np.asarray(gain_values, dtype=float)
    p = np.asarray(powers, dtype=float)
    alpha = np.asarray(order, dtype=float)
    received = g * p
    interference = alpha @ received
    return np.log2(1.0 + received / (1.0 + interference))


def sum_rate(gain_values, powers) -> float:
    """Sum of all user rates, ``log2(1 + sum_i p_i h_i)``.

    Equal to ``sum(user_rates(...))`` for any complete decoding order; the
    telescoping makes the total independent of the order itself.
    """
    g = np.asarray(gain_values, dtype=float)
    p = np.asarray(powers, dtype=float)
    return float(np.log2(1.0 + g @ p))
