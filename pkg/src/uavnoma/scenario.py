"""Problem instances: ground users, UAV altitude, channel constant, and budgets."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Scenario",
    "SweepSpec",
    "ValidationError",
    "load_scenario",
    "save_scenario",
    "generate_scenario",
]

SCHEMES = ("njdp", "nlc", "nfdp", "fdma", "oracle")

_SCENARIO_KEYS = {"users", "altitude_h", "gamma0", "beta0", "sigma2", "p_max", "r_star", "area"}


class ValidationError(ValueError):
    """A scenario file or field violates an invariant."""


@dataclass(frozen=True, eq=False)
class Scenario:
    """An uplink data-collection instance.

    Units are fixed: meters for coordinates and altitude, watts for powers,
    bits/s/Hz for rates.  ``gamma0`` is the reference SNR (channel gain at
    1 m divided by the noise power), so ``gamma0 / d^2`` is the per-watt SNR
    of a user at squared distance ``d^2``.
    """

    users: np.ndarray                      # (M, 2) ground coordinates
    altitude_h: float = 100.0
    gamma0: float = 1e6
    p_max: float = 1.0
    r_star: float = 0.5
    area: tuple[float, float, float, float] | None = None  # (xmin, ymin, xmax, ymax)

    def __post_init__(self):
        users = np.atleast_2d(np.asarray(self.users, dtype=float)).copy()
        if users.size == 0:
            raise ValidationError("users must be non-empty")
        if users.ndim != 2 or users.shape[1] != 2:
            raise ValidationError("users must be an array of [x, y] pairs")
        if not np.all(np.isfinite(users)):
            raise ValidationError("user coordinates must be finite")
        users.setflags(write=False)
        object.__setattr__(self, "users", users)

        for name in ("altitude_h", "gamma0", "p_max", "r_star"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ValidationError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if self.altitude_h < 1.0:
            raise ValidationError("altitude_h must be >= 1 m")
        if self.gamma0 <= 0.0:
            raise ValidationError("gamma0 must be > 0")
        if self.p_max <= 0.0:
            raise ValidationError("p_max must be > 0")
        if self.r_star <= 0.0:
            raise ValidationError("r_star must be > 0")

        if self.area is None:
            # default search box: users' bounding box padded by 100 m per side
            lo = users.min(axis=0) - 100.0
            hi = users.max(axis=0) + 100.0
            area = (float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1]))
        else:
            area = tuple(float(v) for v in self.area)
            if len(area) != 4 or not all(np.isfinite(area)):
                raise ValidationError("area must be four finite numbers [xmin, ymin, xmax, ymax]")
            if area[0] >= area[2] or area[1] >= area[3]:
                raise ValidationError("area must be a non-degenerate box (xmin < xmax, ymin < ymax)")
            inside = (
                (users[:, 0] >= area[0])
                & (users[:, 0] <= area[2])
                & (users[:, 1] >= area[1])
                & (users[:, 1] <= area[3])
            )
            if not np.all(inside):
                raise ValidationError("all users must lie inside the search area")
        object.__setattr__(self, "area", area)

    @property
    def num_users(self) -> int:
        return self.users.shape[0]


@dataclass(frozen=True)
class SweepSpec:
    """Axis description for a parameter sweep over ``r_star`` or ``p_max``."""

    variable: str
    start: float
    stop: float
    step: float
    schemes: tuple[str, ...] = ("njdp", "nlc", "nfdp", "fdma")

    def __post_init__(self):
        if self.variable not in ("r_star", "p_max"):
            raise ValidationError("sweep variable must be 'r_star' or 'p_max'")
        if self.step <= 0.0:
            raise ValidationError("sweep step must be > 0")
        if self.start > self.stop:
            raise ValidationError("sweep start must be <= stop")
        schemes = tuple(self.schemes)
        if not schemes:
            raise ValidationError("at least one scheme is required")
        for s in schemes:
            if s not in SCHEMES:
                raise ValidationError(f"unknown scheme '{s}' (expected one of {', '.join(SCHEMES)})")
        object.__setattr__(self, "schemes", schemes)

    def values(self) -> np.ndarray:
        n = int(np.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return self.start + self.step * np.arange(n)


def load_scenario(path) -> Scenario:
    """Load and validate a scenario from a JSON file.

    The file must contain ``users`` (array of [x, y] pairs), ``altitude_h``,
    ``p_max`` and ``r_star``, plus either ``gamma0`` directly or the pair
    ``beta0``/``sigma2`` (folded into ``gamma0 = beta0 / sigma2``).  An
    optional ``area`` gives the [xmin, ymin, xmax, ymax] search box.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ValidationError(f"malformed scenario file {path}: {exc}") from exc

    if not isinstance(raw, dict):
        raise ValidationError("scenario file must contain a JSON object")
    unknown = set(raw) - _SCENARIO_KEYS
    if unknown:
        raise ValidationError(f"unknown scenario keys: {', '.join(sorted(unknown))}")
    for key in ("users", "altitude_h", "p_max", "r_star"):
        if key not in raw:
            raise ValidationError(f"scenario file is missing required key '{key}'")

    if "gamma0" in raw:
        gamma0 = raw["gamma0"]
    elif "beta0" in raw and "sigma2" in raw:
        if float(raw["sigma2"]) <= 0.0:
            raise ValidationError("sigma2 must be > 0")
        gamma0 = float(raw["beta0"]) / float(raw["sigma2"])
    else:
        raise ValidationError("scenario file must provide gamma0 or both beta0 and sigma2")

    return Scenario(
        users=np.asarray(raw["users"], dtype=float),
        altitude_h=raw["altitude_h"],
        gamma0=gamma0,
        p_max=raw["p_max"],
        r_star=raw["r_star"],
        area=raw.get("area"),
    )


def save_scenario(scenario: Scenario, path) -> None:
    """Write a scenario as JSON, round-trippable through :func:`load_scenario`."""
    doc = {
        "users": [[float(x), float(y)] for x, y in scenario.users],
        "altitude_h": scenario.altitude_h,
        "gamma0": scenario.gamma0,
        "p_max": scenario.p_max,
        "r_star": scenario.r_star,
        "area": list(scenario.area),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def generate_scenario(
    seed: int,
    m: int,
    area=(0.0, 0.0, 400.0, 400.0),
    altitude_h: float = 100.0,
    gamma0: float = 1e6,
    p_max: float = 1.0,
    r_star: float = 0.5,
) -> Scenario:
    """Draw ``m`` users i.i.d. uniformly over ``area``; deterministic per seed."""
    if m < 1:
        raise ValidationError("m must be >= 1")
    xmin, ymin, xmax, ymax = (float(v) for v in area)
    if xmin >= xmax or ymin >= ymax:
        raise ValidationError("area must be a non-degenerate box (xmin < xmax, ymin < ymax)")
    rng = np.random.default_rng(seed)
    users = np.column_stack(
        [rng.uniform(xmin, xmax, size=m), rng.uniform(ymin, ymax, size=m)]
    )
    return Scenario(
        users=users,
        altitude_h=altitude_h,
        gamma0=gamma0,
        p_max=p_max,
        r_star=r_star,
        area=(xmin, ymin, xmax, ymax),
    )
