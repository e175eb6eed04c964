"""Surrogate gas-turbine performance model.

Maps ambient conditions and a commanded load fraction to the deliverable
baseload power and the fuel energy flow.  Power follows a linear
temperature derate scaled by ambient pressure, capped by a flat rating at
cold ambients.  Fuel follows an affine Willans line, so part-load efficiency
drops monotonically and the zero-load intercept doubles as the
mechanical-idle fuel rate used during start-up.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError

ISO_PRESSURE_KPA = 101.325
ISO_TEMPERATURE_C = 15.0
GJ_PER_MWH = 3.6


@dataclass(frozen=True)
class AmbientConditions:
    """Ambient state for one hour."""

    temperature: float  # degC
    pressure: float  # kPa
    rel_humidity: float  # percent

    def __post_init__(self):
        if not self.pressure > 0:
            raise DomainError(f"pressure must be positive, got {self.pressure}")
        if not 0.0 <= self.rel_humidity <= 100.0:
            raise DomainError(f"rel_humidity must be in [0, 100], got {self.rel_humidity}")
        if not -60.0 <= self.temperature <= 60.0:
            raise DomainError(f"temperature must be in [-60, 60] degC, got {self.temperature}")


@dataclass(frozen=True)
class SurrogateParams:
    """Calibration constants of the surrogate.

    :param p_iso: baseload power at 15 degC and 101.325 kPa, MW.
    :param p_flat: mechanical/generator ceiling, MW.
    :param c_temp: fractional power derate per kelvin above 15 degC.
    :param eta_full: electrical efficiency at full load.
    :param c_idle: fuel at zero load as a fraction of full-load fuel.
    :param c_humidity: humidity derate per percentage point; 0 disables it.
    """

    p_iso: float = 32.0
    p_flat: float = 30.3
    c_temp: float = 0.007
    eta_full: float = 0.40
    c_idle: float = 0.2
    c_humidity: float = 0.0

    def __post_init__(self):
        if not (self.p_iso > 0 and self.p_flat > 0 and self.c_temp > 0):
            raise DomainError("p_iso, p_flat and c_temp must be positive")
        if not 0.0 < self.eta_full < 1.0:
            raise DomainError(f"eta_full must be in (0, 1), got {self.eta_full}")
        if not 0.0 <= self.c_idle < 1.0:
            raise DomainError(f"c_idle must be in [0, 1), got {self.c_idle}")
        if self.c_humidity < 0:
            raise DomainError("c_humidity must be non-negative")


DEFAULT_PARAMS = SurrogateParams()


@dataclass(frozen=True)
class GtOperatingPoint:
    load_fraction: float
    net_power: float  # MW
    fuel_energy_rate: float  # GJ/h


def max_power_array(temperature, pressure, rel_humidity=0.0, params: SurrogateParams = DEFAULT_PARAMS):
    """Vectorised :func:`max_power` over arrays of ambient values."""
    temperature = np.asarray(temperature, dtype=float)
    pressure = np.asarray(pressure, dtype=float)
    derate = 1.0 - params.c_temp * (temperature - ISO_TEMPERATURE_C)
    if params.c_humidity:
        derate = derate - params.c_humidity * np.asarray(rel_humidity, dtype=float)
    p = params.p_iso * (pressure / ISO_PRESSURE_KPA) * derate
    return np.clip(p, 0.0, params.p_flat)


def max_power(ambient: AmbientConditions, params: SurrogateParams = DEFAULT_PARAMS) -> float:
    """Maximum deliverable (baseload) power in MW at the given ambient."""
    return float(max_power_array(ambient.temperature, ambient.pressure, ambient.rel_humidity, params))


def full_load_fuel_rate(p_max: float, params: SurrogateParams = DEFAULT_PARAMS) -> float:
    """Fuel energy rate (GJ/h) at 100 % load for a given baseload power."""
    return p_max * GJ_PER_MWH / params.eta_full


def fuel_rate_at(load_fraction: float, p_max: float, params: SurrogateParams = DEFAULT_PARAMS) -> float:
    """Willans-line fuel rate for a known baseload power ``p_max``."""
    if not 0.0 <= load_fraction <= 1.0:
        raise DomainError(f"load_fraction must be in [0, 1], got {load_fraction}")
    if load_fraction == 0.0:
        return 0.0
    return (params.c_idle + (1.0 - params.c_idle) * load_fraction) * full_load_fuel_rate(p_max, params)


def fuel_rate(load_fraction: float, ambient: AmbientConditions,
              params: SurrogateParams = DEFAULT_PARAMS) -> float:
    """Fuel energy rate in GJ/h at ``load_fraction`` of baseload.

    Raises :class:`DomainError` for a load fraction outside [0, 1].
    """
    return fuel_rate_at(load_fraction, max_power(ambient, params), params)


def mechanical_idle_fuel_rate(ambient: AmbientConditions, params: SurrogateParams = DEFAULT_PARAMS) -> float:
    """Fuel rate at mechanical idle: the Willans-line intercept, GJ/h."""
    return params.c_idle * full_load_fuel_rate(max_power(ambient, params), params)


def efficiency(load_fraction: float, ambient: AmbientConditions,
               params: SurrogateParams = DEFAULT_PARAMS) -> float:
    """Implied electrical efficiency at a positive load fraction."""
    if load_fraction <= 0.0:
        raise DomainError("efficiency is undefined at zero load")
    p = max_power(ambient, params)
    return load_fraction * p * GJ_PER_MWH / fuel_rate_at(load_fraction, p, params)


def operating_point(load_fraction: float, ambient: AmbientConditions,
                    params: SurrogateParams = DEFAULT_PARAMS) -> GtOperatingPoint:
    p = max_power(ambient, params)
    return GtOperatingPoint(load_fraction, load_fraction * p, fuel_rate_at(load_fraction, p, params))
