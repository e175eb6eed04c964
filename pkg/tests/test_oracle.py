import time

import numpy as np
import pytest

from conftest import random_scenario
from gtdispatch.costs import OmVariant
from gtdispatch.env import DispatchEnv, schedule_cost
from gtdispatch.exceptions import DomainError
from gtdispatch.oracle import all_off_cost, dp_optimal, exhaustive_optimal, replay_cost
from gtdispatch.scenario import ScenarioTable


@pytest.mark.parametrize("variant", list(OmVariant))
@pytest.mark.parametrize("seed", range(3))
def test_dp_equals_exhaustive(variant, seed):
    sc = random_scenario(np.random.default_rng(100 + seed), 6)
    d = dp_optimal(sc, om_variant=variant)
    e = exhaustive_optimal(sc, om_variant=variant)
    assert d.cost == e.cost


def test_exhaustive_long_horizon_tracks_uncapped_counter():
    # 4 levels over 11 hours: enough for runs to pass the 8-hour threshold
    sc = random_scenario(np.random.default_rng(5), 11, price_range=(80.0, 300.0))
    levels = (0.0, 0.5, 0.8, 1.0)
    assert dp_optimal(sc, levels).cost == exhaustive_optimal(sc, levels).cost


def test_exhaustive_bound():
    with pytest.raises(DomainError):
        exhaustive_optimal(ScenarioTable.constant(9, 50.0, 10.0))


def test_dp_never_worse_than_all_off(default_year):
    w = default_year.window(24 * 14, 24 * 14)
    assert dp_optimal(w).cost <= all_off_cost(w)


def test_zero_price_keeps_gt_off():
    sc = ScenarioTable.constant(24, 0.0, 20.0)
    res = dp_optimal(sc)
    assert res.gt_hours == 0
    assert res.cost == pytest.approx(all_off_cost(sc))


def test_extreme_price_runs_gt():
    sc = ScenarioTable.constant(24, 900.0, 30.0)
    res = dp_optimal(sc)
    assert res.gt_hours == 24 and res.gt_cycles == 1


@pytest.mark.parametrize("variant", list(OmVariant))
def test_replay_reproduces_dp(default_year, variant):
    w = default_year.window(24 * 100, 24 * 30)
    res = dp_optimal(w, om_variant=variant)
    total, infos = replay_cost(res.schedule, w, om_variant=variant)
    assert total == pytest.approx(res.cost, rel=1e-9)
    env = DispatchEnv(w, horizon=None, om_variant=variant)
    assert schedule_cost(env, res.load_fractions)["cost"] == pytest.approx(res.cost, rel=1e-9)
    for info in infos:
        assert info["p_grid"] * info["p_waste"] == 0.0


def test_full_year_dp_fast(default_year):
    t = time.perf_counter()
    res = dp_optimal(default_year)
    assert time.perf_counter() - t < 5.0
    assert len(res.schedule) == 8760


def test_custom_levels():
    sc = ScenarioTable.constant(12, 200.0, 30.0)
    res = dp_optimal(sc, (0.0, 1.0))
    assert set(res.load_fractions.tolist()) <= {0.0, 1.0}
    with pytest.raises(DomainError):
        dp_optimal(sc, (0.5, 1.0))
