import math

import numpy as np
import pytest
import yaml

from gtdispatch.agents import EpisodeStats, TrainingCurve, register_agent
from gtdispatch.config import AgentConfig, ExperimentConfig, ScenarioSource, dump_config, load_config
from gtdispatch.costs import OmVariant
from gtdispatch.exceptions import ConfigurationError, TrainingError
from gtdispatch.harness import (accumulated_reward, build_report, compare_om_variants, curve_statistics,
                                load_trained_agent, run_experiment, sample_efficiency)

WINDOW = ScenarioSource(seed=0, window=(24 * 14, 48))


class StubAgent:
    """Reports a fixed reward per episode without touching the environment."""

    def __init__(self, episodes=20, seed=0, reward=-5.0, by_seed=None, fail_seed=None):
        self.episodes, self.seed, self.reward = episodes, seed, reward
        self.by_seed, self.fail_seed = by_seed, fail_seed

    def _r(self):
        return self.by_seed[self.seed] if self.by_seed else self.reward

    def fit(self, env, callback=None):
        self.curve_ = TrainingCurve()
        for ep in range(self.episodes):
            if self.seed == self.fail_seed and ep == 3:
                raise TrainingError("non-finite loss")
            stats = EpisodeStats(ep, self._r(), 2, 1)
            self.curve_.append(stats)
            callback(stats)
        return self

    def evaluate(self, env):
        return EpisodeStats(-1, self._r(), 2, 1)


register_agent("stub", StubAgent)


def config(tmp_path, agents, **kw):
    kw.setdefault("seeds", (0,))
    kw.setdefault("episodes", 20)
    return ExperimentConfig(agents=tuple(agents), scenario=WINDOW, output_dir=str(tmp_path / "out"), **kw)


def test_constant_stub_metrics(tmp_path):
    report, results = run_experiment(config(tmp_path, [AgentConfig("stub", {"reward": -7.25})]))
    cell = report["stub", "dynamic"]
    assert all(r.ok for r in results)
    assert cell.accumulated_reward == -7.25
    assert cell.sample_efficiency == -7.25
    assert cell.complete


def test_two_point_statistics(tmp_path):
    agent = AgentConfig("stub", {"by_seed": {0: 1.0, 1: -1.0}})
    report, _ = run_experiment(config(tmp_path, [agent], seeds=(0, 1)))
    cell = report["stub", "dynamic"]
    assert np.all(cell.curve_mean == 0.0) and np.all(cell.curve_std == 1.0)
    rows = (tmp_path / "out" / "curves" / "stub_dynamic.csv").read_text().splitlines()
    assert rows[0] == "episode,mean_reward_cad,std_reward_cad,mean_minus_std,mean_plus_std,n_seeds"
    assert rows[1] == "0,0.0,1.0,-1.0,1.0,2"


def test_metric_definitions():
    runs = [np.arange(30.0), np.arange(30.0) + 10]
    assert accumulated_reward(runs) == pytest.approx(np.mean([np.mean(r[-10:]) for r in runs]))
    assert sample_efficiency(runs) == pytest.approx(np.mean([np.mean(r[:20]) for r in runs]))
    assert math.isnan(sample_efficiency([np.arange(5.0)]))
    mean, std = curve_statistics(runs)
    assert np.all(std >= 0) and np.allclose(mean, np.arange(30.0) + 5)


def test_report_recomputed_bit_for_bit(tmp_path):
    agent = AgentConfig("dqn", {"learning_starts": 10, "batch_size": 8, "hidden_layers": (8,)})
    run_experiment(config(tmp_path, [agent], seeds=(0, 1), episodes=3, sample_efficiency=False))
    out = tmp_path / "out"
    first = (out / "metrics.csv").read_bytes()
    curves = (out / "curves" / "dqn_dynamic.csv").read_bytes()
    build_report(out)
    assert (out / "metrics.csv").read_bytes() == first
    assert (out / "curves" / "dqn_dynamic.csv").read_bytes() == curves


def test_failed_run_recorded_and_excluded(tmp_path):
    agent = AgentConfig("stub", {"by_seed": {0: 1.0, 1: 3.0}, "fail_seed": 1})
    with pytest.warns(RuntimeWarning):
        report, results = run_experiment(config(tmp_path, [agent], seeds=(0, 1)))
    assert [r.ok for r in results] == [True, False]
    assert (tmp_path / "out" / "stub" / "dynamic" / "seed_1" / "FAILED").read_text().startswith("TrainingError")
    cell = report["stub", "dynamic"]
    assert cell.seeds_completed == 1 and cell.seeds_configured == 2 and not report.complete
    assert cell.accumulated_reward == 1.0
    assert "stub,dynamic,1,2,0," in (tmp_path / "out" / "metrics.csv").read_text()


def test_compare_om_insensitive_stub(tmp_path):
    cmp, results = compare_om_variants(config(tmp_path, [AgentConfig("stub")]), episodes=20)
    assert len(results) == 3
    cells = [cmp.report["stub", v] for v in OmVariant]
    assert len({(c.accumulated_reward, c.gt_hours_last10, c.gt_cycles_last10) for c in cells}) == 1
    assert all(v == 0.0 for v in cmp.increases.values())
    assert set(cmp.increases) == {(a, m, v) for a in ("last10", "final") for m in ("hours", "cycles")
                                  for v in ("hourly", "none")}
    assert (tmp_path / "out" / "om_comparison.csv").exists()


def test_run_directory_reproduces_run(tmp_path):
    agent = AgentConfig("ppo", {"minibatch_size": 16, "hidden_layers": (8,)})
    run_experiment(config(tmp_path, [agent], seeds=(4,), episodes=3, sample_efficiency=False))
    run = tmp_path / "out" / "ppo" / "dynamic" / "seed_4"
    snap = load_config(run / "config.yaml")
    assert snap.seeds == (4,) and snap.episodes == 3 and snap.agents[0].algorithm == "ppo"
    rerun = ExperimentConfig.from_dict({**snap.to_dict(), "output_dir": str(tmp_path / "again")})
    run_experiment(rerun)
    again = tmp_path / "again" / "ppo" / "dynamic" / "seed_4"
    assert (again / "episodes.csv").read_bytes() == (run / "episodes.csv").read_bytes()


def test_trained_agent_reloads(tmp_path):
    agent = AgentConfig("reinforce", {"hidden_layers": (8,)})
    run_experiment(config(tmp_path, [agent], episodes=2, sample_efficiency=False))
    run = tmp_path / "out" / "reinforce" / "dynamic" / "seed_0"
    restored, snap = load_trained_agent(run)
    from gtdispatch.harness import make_env
    stats = restored.evaluate(make_env(snap.scenario.load(), "reinforce"))
    import json
    saved = json.loads((run / "evaluation.json").read_text())
    assert stats.reward == saved["reward_cad"]


def test_dqn_short_mode_epsilon(tmp_path):
    agent = AgentConfig("dqn", {"learning_starts": 10, "batch_size": 8, "hidden_layers": (8,)}, episodes=20)
    run_experiment(config(tmp_path, [agent], episodes=250))
    curve = TrainingCurve.from_csv(tmp_path / "out" / "dqn" / "dynamic" / "seed_0" / "episodes.csv")
    eps = [e.epsilon for e in curve]
    assert len(eps) == 20 and eps[0] == 0.8
    assert all(e > 0.001 for e in eps[:10]) and eps[10:] == [0.001] * 10


def test_rule_runs_in_harness(tmp_path):
    report, results = run_experiment(config(tmp_path, [AgentConfig("rule")], episodes=20))
    assert results[0].ok
    cell = report["rule", "dynamic"]
    assert cell.accumulated_reward == pytest.approx(cell.eval_reward, rel=1e-12)
    assert cell.sample_efficiency == pytest.approx(cell.eval_reward, rel=1e-12)


def test_parallel_matches_serial(tmp_path):
    agent = AgentConfig("cem", {"population_size": 3, "hidden_layers": (4,)})
    base = config(tmp_path, [agent], seeds=(0, 1), episodes=3, sample_efficiency=False)
    run_experiment(base)
    from dataclasses import replace
    run_experiment(replace(base, output_dir=str(tmp_path / "par")), n_jobs=2)
    for s in (0, 1):
        a = tmp_path / "out" / "cem" / "dynamic" / f"seed_{s}" / "episodes.csv"
        b = tmp_path / "par" / "cem" / "dynamic" / f"seed_{s}" / "episodes.csv"
        assert a.read_bytes() == b.read_bytes()


# --------------------------------------------------------------------------- config

def test_config_round_trip(tmp_path):
    cfg = ExperimentConfig(agents=(AgentConfig("dqn", {"gamma": 0.9, "hidden_layers": (32, 32)}, episodes=20),
                                   AgentConfig("ppo")),
                           scenario=ScenarioSource(seed=3, window=(0, 100)), seeds=(0, 1),
                           om_variants=("dynamic", "hourly"))
    path = dump_config(cfg, tmp_path / "c.yaml")
    assert load_config(path) == cfg
    assert yaml.safe_load(path.read_text())["agents"][0]["params"]["hidden_layers"] == [32, 32]


def test_config_overrides():
    cfg = ExperimentConfig(agents=(AgentConfig("dqn", episodes=20),))
    new = cfg.with_overrides(seed=7, episodes=50, output_dir="x", om_variant="none")
    assert new.seeds == (7,) and new.episodes_for(new.agents[0]) == 50
    assert new.output_dir == "x" and new.om_variants == (OmVariant.NO_VARIABLE,)


@pytest.mark.parametrize("data", [
    {"agents": ["dqn"], "seeds": []},
    {"agents": []},
    {"agents": ["dqn"], "episodes": 10},
    {"agents": ["dqn"], "colour": "red"},
    {"agents": [{"algorithm": "dqn", "params": {"gamma": 1.5}}]},
    {"agents": [{"algorithm": "dqn", "params": {"epsilon_start": 0.1, "epsilon_end": 0.5}}]},
    {"agents": ["sarsa"]},
    {"agents": ["dqn"], "scenario": {"seed": 1, "directory": "d"}},
    {"agents": ["dqn"], "om_variants": ["weekly"]},
])
def test_invalid_configs(data):
    with pytest.raises((ConfigurationError, ValueError)):
        ExperimentConfig.from_dict(data)


def test_short_episodes_allowed_without_sample_efficiency():
    cfg = ExperimentConfig.from_dict({"agents": ["dqn"], "episodes": 5, "sample_efficiency": False})
    assert cfg.episodes == 5
