import numpy as np
import pytest

from uavnoma import Scenario

REF_USERS = np.array([[50.0, 50.0], [350.0, 80.0], [200.0, 320.0], [120.0, 180.0]])


@pytest.fixture(scope="session")
def reference_scenario() -> Scenario:
    """Fixed 4-user instance used throughout: 400 x 400 m area, H = 100 m."""
    return Scenario(
        users=REF_USERS.copy(),
        altitude_h=100.0,
        gamma0=1e6,
        p_max=1.0,
        r_star=0.5,
        area=(0.0, 0.0, 400.0, 400.0),
    )


def random_powers(rng: np.random.Generator, m: int, p_max: float) -> np.ndarray:
    """Random nonnegative powers with total at most p_max."""
    raw = rng.random(m)
    return raw / raw.sum() * p_max * rng.uniform(0.2, 1.0)
