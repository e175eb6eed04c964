"""Perfect-foresight optimal dispatch for deterministic scenarios.

``dp_optimal`` runs backward induction over (hour, consecutive-hour
counter).  The counter is capped at the O&M threshold: above it neither the
O&M charge nor the next mode changes, so the cap loses nothing.  That cap is
the one piece of reasoning the DP adds on top of the environment, and
``exhaustive_optimal`` checks it by brute force on short horizons using the
uncapped counter.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import costs
from .costs import GtMode, OmVariant
from .env import DISCRETE_LEVELS, ActionSpec, DispatchEnv, energy_cost
from .exceptions import DomainError
from .scenario import ScenarioTable

MAX_EXHAUSTIVE_SEQUENCES = 6_000_000


@dataclass
class OracleResult:
    cost: float  # C$
    schedule: np.ndarray  # action indices into ``levels``
    levels: tuple[float, ...]

    @property
    def load_fractions(self) -> np.ndarray:
        return np.asarray(self.levels)[self.schedule]

    @property
    def gt_hours(self) -> int:
        return int(np.count_nonzero(self.schedule))

    @property
    def gt_cycles(self) -> int:
        on = self.schedule > 0
        return int(on[0]) + int(np.count_nonzero(on[1:] & ~on[:-1]))


def _resolve_env(scenario: ScenarioTable, levels, env: DispatchEnv | None, env_kwargs) -> DispatchEnv:
    spec = ActionSpec.discrete(levels)
    if env is None:
        return DispatchEnv(scenario, action_spec=spec, horizon=None, **env_kwargs)
    return env.copy_config(scenario=scenario, action_spec=spec, horizon=None, **env_kwargs)


def _check_levels(levels) -> tuple[float, ...]:
    levels = tuple(float(x) for x in levels)
    if not levels or levels[0] != 0.0 or list(levels) != sorted(set(levels)) or levels[-1] > 1.0:
        raise DomainError("action levels must be strictly increasing in [0, 1] starting with 0")
    return levels


def stage_energy_costs(env: DispatchEnv, levels) -> tuple[np.ndarray, np.ndarray]:
    """Grid-plus-fuel cost per (hour, level) for running and for starting hours.

    Values come from the same per-hour balance the environment uses.
    """
    sc = env.scenario
    n, k = len(sc), len(levels)
    run = np.empty((n, k))
    start = np.empty((n, k))
    for t in range(n):
        p_max = float(env.p_max[t])
        for a, lvl in enumerate(levels):
            for table, started in ((run, False), (start, lvl > 0)):
                *_, c_grid, c_fuel = energy_cost(lvl, t, sc, p_max, started, env.surrogate_params, env.fuel_price)
                table[t, a] = c_grid + c_fuel
    return run, start


def _om_charge(hcount: int, on: bool, env: DispatchEnv) -> float:
    thr = env.om_params.threshold
    mode = GtMode.OFF if hcount == 0 else (GtMode.EXTENDED if hcount >= thr else GtMode.RUNNING)
    fixed, cycle, hourly = costs.om_components(mode, on, env.om_params, env.om_variant)
    return fixed + cycle + hourly


def dp_optimal(scenario: ScenarioTable, action_levels=DISCRETE_LEVELS, env: DispatchEnv | None = None,
               **env_kwargs) -> OracleResult:
    """Minimum total cost and an optimal schedule by backward induction.

    :param env: template whose surrogate, O&M and fuel settings are used.
    :param env_kwargs: overrides such as ``om_variant``.
    Ties are broken towards the lower action index.
    """
    levels = _check_levels(action_levels)
    env = _resolve_env(scenario, levels, env, env_kwargs)
    run, start = stage_energy_costs(env, levels)
    thr = env.om_params.threshold
    n, k = run.shape
    om = [[_om_charge(h, on, env) for on in (False, True)] for h in range(thr + 1)]
    nxt = [[0] + [min(h + 1, thr)] * (k - 1) for h in range(thr + 1)]
    value = [0.0] * (thr + 1)
    policy = np.zeros((n, thr + 1), dtype=np.int64)
    run_l, start_l = run.tolist(), start.tolist()
    for t in range(n - 1, -1, -1):
        new = [0.0] * (thr + 1)
        for h in range(thr + 1):
            energy = start_l[t] if h == 0 else run_l[t]
            best_a, best = 0, (energy[0] + om[h][0]) + value[0]
            for a in range(1, k):
                c = (energy[a] + om[h][1]) + value[nxt[h][a]]
                if c < best:
                    best_a, best = a, c
            new[h] = best
            policy[t, h] = best_a
        value = new
    schedule = np.empty(n, dtype=np.int64)
    h = 0
    for t in range(n):
        a = int(policy[t, h])
        schedule[t] = a
        h = nxt[h][a]
    return OracleResult(value[0], schedule, levels)


def exhaustive_optimal(scenario: ScenarioTable, action_levels=DISCRETE_LEVELS, env: DispatchEnv | None = None,
                       max_sequences: int = MAX_EXHAUSTIVE_SEQUENCES, **env_kwargs) -> OracleResult:
    """Minimum cost by enumerating every action sequence.

    Tracks the true (uncapped) consecutive-hour counter.  Sums are
    accumulated from the last hour backwards, the same order as the DP, so
    equal optima compare equal bit for bit.

    :raises DomainError: if ``len(levels) ** hours`` exceeds ``max_sequences``.
    """
    levels = _check_levels(action_levels)
    n, k = len(scenario), len(levels)
    total_seq = k ** n
    if total_seq > max_sequences:
        raise DomainError(f"{k}^{n} = {total_seq} sequences exceeds the enumeration bound of {max_sequences}")
    env = _resolve_env(scenario, levels, env, env_kwargs)
    run, start = stage_energy_costs(env, levels)
    om = np.array([[_om_charge(h, on, env) for on in (False, True)] for h in range(n + 1)])

    prefix_len = min(2, n - 1) if n > 1 else 0
    m = n - prefix_len
    inner = np.array(list(itertools.product(range(k), repeat=m)), dtype=np.int64).reshape(-1, m)
    suffix_totals = {}

    def suffix(h0: int) -> np.ndarray:
        # backward-summed cost of every inner sequence given the counter after the prefix
        if h0 not in suffix_totals:
            hc = np.full(len(inner), h0, dtype=np.int64)
            stage = np.empty((len(inner), m))
            for j in range(m):
                t = prefix_len + j
                a = inner[:, j]
                on = a > 0
                energy = np.where(hc == 0, start[t, a], run[t, a])
                stage[:, j] = energy + om[hc, on.astype(np.int64)]
                hc = np.where(on, hc + 1, 0)
            total = stage[:, m - 1].copy()
            for j in range(m - 2, -1, -1):
                total = stage[:, j] + total
            suffix_totals[h0] = total
        return suffix_totals[h0]

    best_cost, best_seq = np.inf, None
    for prefix in itertools.product(range(k), repeat=prefix_len):
        h = 0
        pre_costs = []
        for t, a in enumerate(prefix):
            energy = start[t, a] if h == 0 else run[t, a]
            pre_costs.append(energy + om[h, int(a > 0)])
            h = h + 1 if a > 0 else 0
        total = suffix(h)
        for c in reversed(pre_costs):
            total = c + total
        i = int(np.argmin(total))
        if total[i] < best_cost:
            best_cost = float(total[i])
            best_seq = np.concatenate([np.array(prefix, dtype=np.int64), inner[i]])
    return OracleResult(best_cost, best_seq, levels)


def replay_cost(schedule, scenario: ScenarioTable, action_levels=DISCRETE_LEVELS,
                env: DispatchEnv | None = None, **env_kwargs) -> tuple[float, list[dict]]:
    """Total cost of an index schedule played through the environment."""
    levels = _check_levels(action_levels)
    env = _resolve_env(scenario, levels, env, env_kwargs)
    env.reset()
    total, infos = 0.0, []
    for a in schedule:
        res = env.step_index(int(a))
        total -= res.reward
        infos.append(res.info)
    return total, infos


def all_off_cost(scenario: ScenarioTable, om_params: costs.OmParameters = costs.DEFAULT_OM) -> float:
    """Closed-form cost of never running the GT: grid purchases plus fixed O&M."""
    return float(np.sum(scenario.price * scenario.demand)) + om_params.fixed_hourly * len(scenario)
