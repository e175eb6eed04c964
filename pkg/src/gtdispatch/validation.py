"""Input validation helpers shared by the environment, agents and oracle."""
from __future__ import annotations

import math

import numpy as np

from .exceptions import ConfigurationError, DomainError


def check_finite_action(action) -> float:
    try:
        a = float(action)
    except (TypeError, ValueError):
        raise DomainError(f"action must be a real number, got {action!r}") from None
    if not math.isfinite(a):
        raise DomainError(f"action must be finite, got {a}")
    return a


def check_observations(X, n_features: int = 6) -> np.ndarray:
    """Return ``X`` as a 2-D float array with ``n_features`` columns."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != n_features:
        raise DomainError(f"expected observations of shape (n, {n_features}), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DomainError("observations contain non-finite values")
    return X


def check_scenario_length(scenario, horizon: int | None):
    if horizon is not None and len(scenario) != horizon:
        raise ConfigurationError(f"scenario has {len(scenario)} hours, environment expects {horizon}")
    return scenario


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if int(value) != value or value < minimum:
        raise ConfigurationError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def check_fraction(value, name: str, low: float = 0.0, high: float = 1.0,
                   closed_low: bool = True, closed_high: bool = True) -> float:
    v = float(value)
    ok_low = v >= low if closed_low else v > low
    ok_high = v <= high if closed_high else v < high
    if not (ok_low and ok_high):
        lb, rb = "[" if closed_low else "(", "]" if closed_high else ")"
        raise ConfigurationError(f"{name} must be in {lb}{low}, {high}{rb}, got {value!r}")
    return v
