"""Hourly dispatch environment with reset/step semantics.

Each step the agent picks a load fraction of the hour's deliverable GT
power.  Shortfall against demand is bought from the grid at the pool
price; surplus is wasted (no selling).  The reward is the negative hourly
cost: grid purchases plus fuel plus O&M.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import costs, surrogate
from .costs import CostBreakdown, GtMode, GtState, OmParameters, OmVariant
from .exceptions import DomainError, UsageError
from .scenario import HOURS_PER_YEAR, ScenarioTable
from .surrogate import SurrogateParams
from .validation import check_finite_action, check_observations, check_scenario_length

OBSERVATION_FIELDS = ("pool_price", "load", "temperature", "pressure", "rel_humidity", "gt_mode")
DISCRETE_LEVELS = (0.0, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)


class ActionKind(str, enum.Enum):
    DISCRETE = "discrete"
    CONTINUOUS = "continuous"


@dataclass(frozen=True)
class ActionSpec:
    """How a raw action in [0, 1] becomes a load fraction.

    Continuous actions below ``off_threshold`` switch the GT off; anything
    else runs at no less than ``min_load``.  Discrete actions snap to the
    nearest entry of ``discrete_levels``.
    """

    kind: ActionKind = ActionKind.DISCRETE
    discrete_levels: tuple[float, ...] = DISCRETE_LEVELS
    off_threshold: float = 0.25
    min_load: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "kind", ActionKind(self.kind))
        levels = tuple(float(x) for x in self.discrete_levels)
        if not levels or list(levels) != sorted(set(levels)) or levels[0] != 0.0 or levels[-1] > 1.0:
            raise DomainError("discrete_levels must be strictly increasing in [0, 1] and start at 0")
        object.__setattr__(self, "discrete_levels", levels)
        if not 0.0 <= self.off_threshold <= self.min_load <= 1.0:
            raise DomainError("need 0 <= off_threshold <= min_load <= 1")

    @classmethod
    def discrete(cls, levels=DISCRETE_LEVELS) -> "ActionSpec":
        return cls(ActionKind.DISCRETE, tuple(levels))

    @classmethod
    def continuous(cls, off_threshold: float = 0.25, min_load: float = 0.5) -> "ActionSpec":
        return cls(ActionKind.CONTINUOUS, off_threshold=off_threshold, min_load=min_load)

    @property
    def n_actions(self) -> int:
        return len(self.discrete_levels)

    def resolve(self, action: float) -> float:
        a = min(max(action, 0.0), 1.0)
        if self.kind is ActionKind.CONTINUOUS:
            return 0.0 if a < self.off_threshold else max(a, self.min_load)
        levels = self.discrete_levels
        return min(levels, key=lambda x: (abs(x - a), x))


def discrete_action_map(index: int, levels=DISCRETE_LEVELS) -> float:
    """Load fraction of the discrete action ``index``."""
    if isinstance(index, (bool, np.bool_)) or int(index) != index or not 0 <= index < len(levels):
        raise DomainError(f"action index must be an integer in 0..{len(levels) - 1}, got {index!r}")
    return float(levels[int(index)])


@dataclass
class StepResult:
    observation: np.ndarray
    reward: float  # C$, unscaled
    done: bool
    info: dict = field(default_factory=dict)


def hour_energy_fuel(load_fraction: float, p_max: float, temperature: float, started: bool,
                     params: SurrogateParams) -> tuple[float, float]:
    """Net GT energy (MWh) and fuel (GJ) for one hour, start-up correction included."""
    if load_fraction == 0.0:
        return 0.0, 0.0
    power = load_fraction * p_max
    fuel = surrogate.fuel_rate_at(load_fraction, p_max, params)
    if started:
        idle = params.c_idle * surrogate.full_load_fuel_rate(p_max, params)
        power, fuel = costs.startup_correction(power, fuel, idle, temperature)
    return power, fuel


def energy_cost(load_fraction: float, hour: int, scenario: ScenarioTable, p_max: float, started: bool,
                params: SurrogateParams, fuel_price: float) -> tuple[float, float, float, float, float, float]:
    """Balance one hour: returns (p_gt, p_grid, p_waste, fuel_gj, grid_cost, fuel_cost)."""
    p_gt, fuel = hour_energy_fuel(load_fraction, p_max, float(scenario.temperature[hour]), started, params)
    d = float(scenario.demand[hour])
    p_grid = max(0.0, d - p_gt)
    p_waste = max(0.0, p_gt - d)
    return (p_gt, p_grid, p_waste, fuel,
            costs.grid_cost(float(scenario.price[hour]), p_grid), costs.fuel_cost(fuel, fuel_price))


def scenario_observations(scenario: ScenarioTable, gt_mode=0) -> np.ndarray:
    """Raw observation matrix of a scenario, one row per hour."""
    mode = np.broadcast_to(np.asarray(gt_mode, dtype=float), (len(scenario),))
    return np.column_stack([scenario.price, scenario.demand, scenario.temperature,
                            scenario.pressure, scenario.rel_humidity, mode])


class DispatchEnv:
    """Single-GT hourly dispatch MDP.

    :param scenario: hourly inputs; may also be passed to :meth:`reset`.
    :param action_spec: discrete level set or continuous off-rule.
    :param om_variant: O&M charging scheme.
    :param horizon: required scenario length; ``None`` accepts any length.
    :param reward_scale: factor agents apply to the C$ reward.
    """

    def __init__(self, scenario: ScenarioTable | None = None, action_spec: ActionSpec | None = None,
                 om_variant: OmVariant | str = OmVariant.DYNAMIC,
                 surrogate_params: SurrogateParams = surrogate.DEFAULT_PARAMS,
                 om_params: OmParameters = costs.DEFAULT_OM, fuel_price: float = costs.DEFAULT_FUEL_PRICE,
                 reward_scale: float = 1e-3, horizon: int | None = HOURS_PER_YEAR):
        self.action_spec = action_spec if action_spec is not None else ActionSpec.discrete()
        self.om_variant = OmVariant.parse(om_variant)
        self.surrogate_params = surrogate_params
        self.om_params = om_params
        self.fuel_price = float(fuel_price)
        self.reward_scale = float(reward_scale)
        self.horizon = horizon
        self.scenario = None
        self._hour = None
        self._state = GtState()
        if scenario is not None:
            self._load(scenario)

    def _load(self, scenario: ScenarioTable):
        check_scenario_length(scenario, self.horizon)
        self.scenario = scenario
        self.p_max = surrogate.max_power_array(scenario.temperature, scenario.pressure,
                                               scenario.rel_humidity, self.surrogate_params)
        self._raw = scenario_observations(scenario)
        self._p_max_list = self.p_max.tolist()

    @property
    def n_hours(self) -> int:
        return len(self.scenario)

    @property
    def hour(self) -> int:
        return self._hour

    @property
    def state(self) -> GtState:
        return self._state

    @property
    def done(self) -> bool:
        return self._hour is not None and self._hour >= len(self.scenario)

    def copy_config(self, **overrides) -> "DispatchEnv":
        """A fresh environment with the same configuration (and optional overrides)."""
        kw = dict(scenario=self.scenario, action_spec=self.action_spec, om_variant=self.om_variant,
                  surrogate_params=self.surrogate_params, om_params=self.om_params,
                  fuel_price=self.fuel_price, reward_scale=self.reward_scale, horizon=self.horizon)
        kw.update(overrides)
        return DispatchEnv(**kw)

    def _observe(self, hour: int) -> np.ndarray:
        obs = self._raw[min(hour, len(self.scenario) - 1)].copy()
        obs[5] = float(self._state.mode)
        return obs

    def reset(self, scenario: ScenarioTable | None = None) -> np.ndarray:
        if scenario is not None:
            self._load(scenario)
        if self.scenario is None:
            raise UsageError("no scenario loaded")
        self._hour = 0
        self._state = GtState()
        return self._observe(0)

    def step(self, action) -> StepResult:
        if self._hour is None:
            raise UsageError("call reset() before step()")
        if self.done:
            raise UsageError("episode is done; call reset()")
        a = check_finite_action(action)
        level = self.action_spec.resolve(a)
        t = self._hour
        on = level > 0.0
        started = on and self._state.mode == GtMode.OFF
        p_max = self._p_max_list[t]
        p_gt, p_grid, p_waste, fuel, c_grid, c_fuel = energy_cost(
            level, t, self.scenario, p_max, started, self.surrogate_params, self.fuel_price)
        fixed, cycle, hourly = costs.om_components(self._state.mode, on, self.om_params, self.om_variant)
        self._state = costs.next_state(self._state, on, self.om_params)
        ledger = CostBreakdown(fuel=c_fuel, grid=c_grid, om_fixed=fixed, om_cycle=cycle, om_hourly=hourly)
        self._hour = t + 1
        info = ledger.as_dict()
        info.update(hour=t, load_fraction=level, p_max=p_max, p_gt=p_gt, p_grid=p_grid,
                    p_waste=p_waste, fuel_gj=fuel, started=started, gt_on=on,
                    gt_mode=int(self._state.mode), hcount=self._state.hcount)
        return StepResult(self._observe(self._hour), -ledger.total, self.done, info)

    def step_index(self, index: int) -> StepResult:
        return self.step(discrete_action_map(index, self.action_spec.discrete_levels))


def rollout(env: DispatchEnv, actions, scenario: ScenarioTable | None = None) -> dict:
    """Play a fixed sequence of raw actions and summarise the episode."""
    env.reset(scenario)
    total = 0.0
    hours = cycles = 0
    infos = []
    for a in actions:
        res = env.step(a)
        total += res.reward
        hours += res.info["gt_on"]
        cycles += res.info["started"]
        infos.append(res.info)
    return {"reward": total, "gt_hours": hours, "gt_cycles": cycles, "infos": infos}


class ObservationScaler(TransformerMixin, BaseEstimator):
    """Min-max scaling of raw observations to [0, 1].

    The GT mode column is mapped to {0, 0.5, 1} regardless of the fitted
    range.  Features whose fitted min equals max map to 0.
    """

    def fit(self, X, y=None):
        X = check_observations(X)
        self.data_min_ = X[:, :5].min(axis=0)
        self.data_max_ = X[:, :5].max(axis=0)
        return self

    def fit_scenario(self, scenario: ScenarioTable):
        return self.fit(scenario_observations(scenario))

    def transform(self, X):
        check_is_fitted(self, ["data_min_", "data_max_"])
        X = check_observations(X)
        span = self.data_max_ - self.data_min_
        safe = np.where(span > 0, span, 1.0)
        out = np.empty_like(X)
        out[:, :5] = np.where(span > 0, (X[:, :5] - self.data_min_) / safe, 0.0)
        out[:, 5] = X[:, 5] / 2.0
        return out


def observation_scaler(raw, stats) -> np.ndarray:
    """Functional form of :class:`ObservationScaler` for given (min, max) stats."""
    scaler = ObservationScaler()
    scaler.data_min_, scaler.data_max_ = (np.asarray(s, dtype=float)[:5] for s in stats)
    out = scaler.transform(raw)
    return out[0] if np.ndim(raw) == 1 else out


def schedule_cost(env: DispatchEnv, load_fractions) -> dict:
    """Vectorised evaluation of a fixed load-fraction schedule.

    Mirrors :meth:`DispatchEnv.step` hour by hour but runs in array form;
    used where thousands of open-loop schedules must be scored.  Inputs are
    taken as already-resolved load fractions.
    """
    sc = env.scenario
    lvl = np.asarray(load_fractions, dtype=float)
    if lvl.shape != (len(sc),):
        raise DomainError(f"schedule must have {len(sc)} entries")
    sp, om = env.surrogate_params, env.om_params
    on = lvl > 0
    prev_on = np.concatenate([[False], on[:-1]])
    started = on & ~prev_on
    c = np.cumsum(on)
    h_after = c - np.maximum.accumulate(np.where(on, 0, c))
    h_before = np.concatenate([[0], h_after[:-1]])

    full = env.p_max * surrogate.GJ_PER_MWH / sp.eta_full
    power = lvl * env.p_max
    fuel = np.where(on, (sp.c_idle + (1.0 - sp.c_idle) * lvl) * full, 0.0)
    frac = np.where(np.asarray(sc.temperature) < 0.0, costs.COLD_START_MIN, costs.REGULAR_START_MIN) / 60.0
    power = np.where(started, power * (1.0 - frac), power)
    fuel = np.where(started, sp.c_idle * full * frac + fuel * (1.0 - frac), fuel)
    p_grid = np.maximum(0.0, sc.demand - power)
    grid = sc.price * p_grid
    fuel_c = env.fuel_price * fuel
    variant = env.om_variant
    if variant is OmVariant.DYNAMIC:
        cycle = np.where(started, om.cycle_cost, 0.0)
        hourly = np.where(on & (h_before >= om.threshold), om.hourly_cost, 0.0)
    elif variant is OmVariant.HOURLY_ONLY:
        cycle = np.zeros(len(sc))
        hourly = np.where(on, om.hourly_cost, 0.0)
    else:
        cycle = hourly = np.zeros(len(sc))
    total = grid + fuel_c + om.fixed_hourly + cycle + hourly
    return {"cost": float(total.sum()), "hourly_cost": total, "gt_hours": int(on.sum()),
            "gt_cycles": int(started.sum())}
