"""Latin hypercube sampling over parameter and flight-condition bounds."""

from __future__ import annotations

import numpy as np

from .atmosphere import FLIGHT_BOUNDS, FlightCondition
from .errors import DomainError
from .geometry import PARAM_BOUNDS, PlanformParams


def lhs_sample(n: int, bounds, seed: int = 0) -> np.ndarray:
    """n stratified samples over ``bounds`` (one (lower, upper) per dimension).

    Per dimension, each of the n equal-width bins receives exactly one
    sample, uniformly placed within its bin. Deterministic for a fixed
    seed; returns an (n, d) array.
    """
    if n < 1:
        raise DomainError(f"need n >= 1 samples, got {n}")
    bounds = [(float(lo), float(hi)) for lo, hi in bounds]
    for lo, hi in bounds:
        if not lo < hi:
            raise DomainError(f"invalid bounds ({lo}, {hi}): lower must be < upper")
    rng = np.random.default_rng(seed)
    out = np.empty((n, len(bounds)))
    for j, (lo, hi) in enumerate(bounds):
        bins = rng.permutation(n)
        u = rng.random(n)
        out[:, j] = lo + (bins + u) / n * (hi - lo)
    return out


def sample_planforms(n: int, seed: int = 0) -> list[PlanformParams]:
    """LHS draw over the nine planform parameter ranges."""
    rows = lhs_sample(n, list(PARAM_BOUNDS.values()), seed=seed)
    return [PlanformParams.from_array(row) for row in rows]


def sample_flight_conditions(n: int, seed: int = 0) -> list[FlightCondition]:
    """LHS draw over the flight-condition ranges."""
    rows = lhs_sample(n, list(FLIGHT_BOUNDS.values()), seed=seed)
    return [FlightCondition.from_array(row) for row in rows]
