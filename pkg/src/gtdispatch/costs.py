"""Hourly cost ledger: grid purchases, fuel, and the dynamic O&M state machine."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

from .exceptions import DomainError

HOURS_PER_YEAR = 8760
DEFAULT_FUEL_PRICE = 3.9  # C$/GJ
REGULAR_START_MIN = 20.0
COLD_START_MIN = 35.0


class GtMode(enum.IntEnum):
    OFF = 0
    RUNNING = 1
    EXTENDED = 2


class OmVariant(str, enum.Enum):
    """How variable O&M cost is charged.

    DYNAMIC charges a cycle cost at every start and an hourly cost only beyond
    the hours-per-cycle threshold.  HOURLY_ONLY charges the hourly cost for
    every operating hour.  NO_VARIABLE charges only the fixed component.
    """

    DYNAMIC = "dynamic"
    HOURLY_ONLY = "hourly"
    NO_VARIABLE = "none"

    @classmethod
    def parse(cls, value) -> "OmVariant":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"dynamic": cls.DYNAMIC, "hourly": cls.HOURLY_ONLY, "hourly_only": cls.HOURLY_ONLY,
                   "none": cls.NO_VARIABLE, "no_variable": cls.NO_VARIABLE}
        try:
            return aliases[key]
        except KeyError:
            raise DomainError(f"unknown O&M variant {value!r}") from None


@dataclass(frozen=True)
class OmParameters:
    """Lifetime and cost figures of the O&M model (C$)."""

    life_hours: float = 200_000
    life_cycles: float = 26_000
    fixed_annual: float = 780_000
    variable_lifetime: float = 33_000_000
    hours_per_year: float = HOURS_PER_YEAR

    def __post_init__(self):
        for name in ("life_hours", "life_cycles", "fixed_annual", "variable_lifetime", "hours_per_year"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be strictly positive")
        if self.threshold < 1:
            raise DomainError("round(life_hours / life_cycles) must be at least 1")

    @cached_property
    def threshold(self) -> int:
        """Consecutive operating hours after which the hourly rate applies."""
        return int(round(self.life_hours / self.life_cycles))

    @cached_property
    def fixed_hourly(self) -> float:
        return self.fixed_annual / self.hours_per_year

    @cached_property
    def cycle_cost(self) -> float:
        return self.variable_lifetime / self.life_cycles

    @cached_property
    def hourly_cost(self) -> float:
        return self.variable_lifetime / self.life_hours


DEFAULT_OM = OmParameters()


class GtState(NamedTuple):
    mode: GtMode = GtMode.OFF
    hcount: int = 0

    def check(self, params: OmParameters = DEFAULT_OM) -> "GtState":
        thr = params.threshold
        ok = ((self.mode == GtMode.OFF and self.hcount == 0)
              or (self.mode == GtMode.RUNNING and 1 <= self.hcount < thr)
              or (self.mode == GtMode.EXTENDED and self.hcount >= thr))
        if not ok:
            raise DomainError(f"inconsistent GT state {self}")
        return self


@dataclass(frozen=True)
class CostBreakdown:
    fuel: float = 0.0
    grid: float = 0.0
    om_fixed: float = 0.0
    om_cycle: float = 0.0
    om_hourly: float = 0.0

    @property
    def total(self) -> float:
        return self.fuel + self.grid + self.om_fixed + self.om_cycle + self.om_hourly

    @property
    def om(self) -> float:
        return self.om_fixed + self.om_cycle + self.om_hourly

    def as_dict(self) -> dict:
        return {"fuel": self.fuel, "grid": self.grid, "om_fixed": self.om_fixed,
                "om_cycle": self.om_cycle, "om_hourly": self.om_hourly, "total": self.total}


_OFF = GtState()
_DYNAMIC, _HOURLY = OmVariant.DYNAMIC, OmVariant.HOURLY_ONLY
_RUNNING, _EXTENDED = GtMode.RUNNING, GtMode.EXTENDED
_new_state = tuple.__new__


def om_components(mode: int, gt_on: bool, params: OmParameters = DEFAULT_OM,
                  variant: OmVariant = OmVariant.DYNAMIC) -> tuple[float, float, float]:
    """(fixed, cycle, hourly) O&M charge for one hour, before the state update."""
    cycle = hourly = 0.0
    if gt_on:
        if variant is OmVariant.DYNAMIC:
            if mode == GtMode.OFF:
                cycle = params.cycle_cost
            elif mode == GtMode.EXTENDED:
                hourly = params.hourly_cost
        elif variant is OmVariant.HOURLY_ONLY:
            hourly = params.hourly_cost
    return params.fixed_hourly, cycle, hourly


def next_state(state: GtState, gt_on: bool, params: OmParameters = DEFAULT_OM) -> GtState:
    if not gt_on:
        return GtState(GtMode.OFF, 0)
    hcount = state.hcount + 1
    mode = GtMode.EXTENDED if hcount >= params.threshold else GtMode.RUNNING
    return GtState(mode, hcount)


def om_step(state: GtState, gt_on: bool, params: OmParameters = DEFAULT_OM,
            variant: OmVariant = OmVariant.DYNAMIC) -> tuple[float, GtState]:
    """Charge one hour of O&M and advance the GT state.

    The charge is decided from the state *before* the hour counter moves, so
    hours 2..threshold of a cycle carry no variable cost under DYNAMIC.
    """
    # inlined om_components/next_state: this sits on the hot path of every rollout
    if not gt_on:
        return params.fixed_hourly, _OFF
    mode, hcount = state
    cost = params.fixed_hourly
    if variant is _DYNAMIC:
        if mode == 0:
            cost += params.cycle_cost
        elif mode == 2:
            cost += params.hourly_cost
    elif variant is _HOURLY:
        cost += params.hourly_cost
    hcount += 1
    return cost, _new_state(GtState, (_EXTENDED if hcount >= params.threshold else _RUNNING, hcount))


def grid_cost(price: float, p_grid: float) -> float:
    """Cost of buying ``p_grid`` MWh at ``price`` C$/MWh (price may be negative)."""
    if p_grid < 0:
        raise DomainError(f"grid purchase must be non-negative, got {p_grid}")
    return price * p_grid


def fuel_cost(q_fuel: float, k_fuel: float = DEFAULT_FUEL_PRICE) -> float:
    if q_fuel < 0:
        raise DomainError(f"fuel quantity must be non-negative, got {q_fuel}")
    return k_fuel * q_fuel


def start_duration_minutes(temperature: float) -> float:
    """Start time in minutes; starts below 0 degC add mechanical-idle warm-up."""
    return COLD_START_MIN if temperature < 0.0 else REGULAR_START_MIN


def startup_correction(commanded_power: float, commanded_fuel: float, idle_fuel: float,
                       temperature: float) -> tuple[float, float]:
    """Net energy (MWh) and fuel (GJ) in an hour during which the GT starts.

    The start portion of the hour burns fuel at mechanical idle and delivers
    no power; the remainder runs at the commanded level.
    """
    frac = start_duration_minutes(temperature) / 60.0
    net = commanded_power * (1.0 - frac)
    fuel = idle_fuel * frac + commanded_fuel * (1.0 - frac)
    return net, fuel
