import numpy as np
import pytest

from conftest import random_scenario
from gtdispatch.costs import OmVariant
from gtdispatch.env import (ActionSpec, DispatchEnv, ObservationScaler, observation_scaler, rollout, schedule_cost,
                            scenario_observations)
from gtdispatch.exceptions import ConfigurationError, DomainError, UsageError
from gtdispatch.oracle import all_off_cost
from gtdispatch.scenario import ScenarioTable

FIXED = 780000 / 8760


def iso_env(hours=3, price=50.0, demand=20.0, **kw):
    sc = ScenarioTable.constant(hours, price, demand, temperature=15.0, pressure=101.325)
    return DispatchEnv(sc, horizon=None, **kw)


def test_always_off_step():
    env = iso_env()
    env.reset()
    res = env.step(0.0)
    assert res.reward == pytest.approx(-(20 * 50 + FIXED))
    assert res.info["p_grid"] == 20 and res.info["gt_mode"] == 0 and res.info["hcount"] == 0


def test_cold_start_full_load_example():
    env = iso_env(price=50.0, demand=20.0)
    env.reset()
    res = env.step_index(6)
    # net 20.2 MW covers the load; 199.98 GJ fuel; fixed + cycle O&M
    assert res.info["p_gt"] == pytest.approx(20.2)
    assert res.info["p_waste"] == pytest.approx(0.2)
    assert res.info["p_grid"] == 0.0
    assert res.info["fuel_gj"] == pytest.approx(199.98)
    expected = 199.98 * 3.9 + FIXED + 33e6 / 26000
    assert res.reward == pytest.approx(-expected)
    assert res.info["gt_mode"] == 1 and res.info["hcount"] == 1


def test_worked_example_reward():
    env = iso_env(price=95.0, demand=10.0)
    env.reset()
    env.step(0.0)
    res = env.step(0.0)
    assert res.reward == pytest.approx(-(950 + FIXED))


@pytest.mark.parametrize("seed", range(5))
def test_energy_balance(seed):
    rng = np.random.default_rng(seed)
    sc = random_scenario(rng, 200)
    env = DispatchEnv(sc, horizon=None, action_spec=ActionSpec.continuous())
    out = rollout(env, rng.uniform(-0.2, 1.2, 200))
    for info, d in zip(out["infos"], sc.demand):
        assert info["p_gt"] + info["p_grid"] - info["p_waste"] == pytest.approx(d, abs=1e-9)
        assert info["p_grid"] >= 0 and info["p_waste"] >= 0
        assert min(info["p_grid"], info["p_waste"]) == 0.0


def test_always_off_closed_form(default_year):
    env = DispatchEnv(default_year)
    out = rollout(env, np.zeros(8760))
    assert -out["reward"] == pytest.approx(all_off_cost(default_year), rel=1e-12)
    assert out["gt_hours"] == 0


def test_determinism():
    rng = np.random.default_rng(7)
    sc = random_scenario(rng, 100)
    actions = rng.integers(0, 7, 100)
    a = [r["total"] for r in rollout(DispatchEnv(sc, horizon=None), actions / 6)["infos"]]
    b = [r["total"] for r in rollout(DispatchEnv(sc, horizon=None), actions / 6)["infos"]]
    assert a == b


def test_discrete_resolution():
    spec = ActionSpec.discrete()
    assert spec.resolve(0.55) == 0.5 or spec.resolve(0.55) == 0.6
    assert spec.resolve(0.1) == 0.0
    assert spec.resolve(2.0) == 1.0
    assert spec.n_actions == 7


def test_continuous_resolution():
    spec = ActionSpec.continuous()
    assert spec.resolve(0.2) == 0.0
    assert spec.resolve(0.3) == 0.5
    assert spec.resolve(0.8) == 0.8
    assert spec.resolve(-3.0) == 0.0
    assert spec.resolve(1.7) == 1.0


def test_non_finite_action_rejected():
    env = iso_env()
    env.reset()
    with pytest.raises(DomainError):
        env.step(np.nan)


def test_lifecycle_errors():
    env = iso_env(hours=1)
    with pytest.raises(UsageError):
        env.step(0)
    env.reset()
    assert env.step(0).done
    with pytest.raises(UsageError):
        env.step(0)
    with pytest.raises(UsageError):
        DispatchEnv().reset()


def test_horizon_enforced():
    with pytest.raises(ConfigurationError):
        DispatchEnv(ScenarioTable.constant(10, 1.0, 1.0))


@pytest.mark.parametrize("variant", list(OmVariant))
@pytest.mark.parametrize("seed", range(4))
def test_schedule_cost_matches_rollout(variant, seed):
    rng = np.random.default_rng(seed)
    sc = random_scenario(rng, 150)
    env = DispatchEnv(sc, horizon=None, om_variant=variant)
    idx = rng.integers(0, 7, 150) * (rng.random(150) < 0.6)
    levels = np.array(env.action_spec.discrete_levels)[idx]
    out = rollout(env, levels)
    fast = schedule_cost(env, levels)
    assert fast["cost"] == pytest.approx(-out["reward"], rel=1e-12)
    assert fast["gt_hours"] == out["gt_hours"] and fast["gt_cycles"] == out["gt_cycles"]
    assert np.allclose(fast["hourly_cost"], [i["total"] for i in out["infos"]], rtol=1e-12)


def test_observation_scaler():
    rng = np.random.default_rng(0)
    sc = random_scenario(rng, 50)
    X = scenario_observations(sc, gt_mode=2)
    scaler = ObservationScaler().fit(X)
    Z = scaler.transform(X)
    assert Z[:, :5].min() == 0.0 and Z[:, :5].max() == 1.0
    assert np.all(Z[:, 5] == 1.0)
    stats = (scaler.data_min_, scaler.data_max_)
    assert np.array_equal(observation_scaler(X[3], stats), Z[3])


def test_scaler_degenerate_column():
    X = scenario_observations(ScenarioTable.constant(4, 10.0, 5.0))
    assert np.all(ObservationScaler().fit_transform(X) == 0.0)


def test_observation_contents():
    env = iso_env(price=42.0, demand=7.0)
    obs = env.reset()
    assert obs.tolist() == [42.0, 7.0, 15.0, 101.325, 60.0, 0.0]
    assert env.step(1.0).observation[5] == 1.0
