"""Multi-seed experiment orchestration, metrics and the O&M variant comparison.

Layout of an output directory::

    <out>/<algorithm>/<om_variant>/seed_<k>/config.yaml     snapshot reproducing the run
                                            episodes.csv    streamed per-episode stats
                                            evaluation.json deterministic post-training episode
                                            *.txt, scaling.json  saved agent
                                            FAILED          present if the run aborted
    <out>/metrics.csv
    <out>/curves/<algorithm>_<om_variant>.csv

Every report is recomputed from the per-episode CSVs, so rerunning
:func:`build_report` on the same directory reproduces it exactly.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from .agents import CurveWriter, EpisodeStats, TrainingCurve, is_discrete, make_agent
from .config import (ACCUMULATED_EPISODES, SAMPLE_EFFICIENCY_EPISODES, AgentConfig, ExperimentConfig, ScenarioSource,
                     dump_config, load_config)
from .costs import OmVariant
from .env import ActionSpec, DispatchEnv
from .exceptions import ConfigurationError
from .scenario import ScenarioTable

log = logging.getLogger(__name__)

METRICS_HEADER = ("algorithm", "om_variant", "seeds_completed", "seeds_configured", "complete",
                  "accumulated_reward_cad", "accumulated_reward_mcad", "sample_efficiency_cad",
                  "sample_efficiency_mcad", "final_reward_cad", "gt_hours_last10", "gt_cycles_last10",
                  "gt_hours_final", "gt_cycles_final", "eval_reward_cad", "eval_gt_hours", "eval_gt_cycles")
CURVE_AGG_HEADER = ("episode", "mean_reward_cad", "std_reward_cad", "mean_minus_std", "mean_plus_std", "n_seeds")
COMPARE_OM_EPISODES = 50
FAILED_MARKER = "FAILED"


# --------------------------------------------------------------------------- single runs

@dataclass(frozen=True)
class RunJob:
    agent: AgentConfig
    seed: int
    episodes: int
    om_variant: OmVariant
    scenario: ScenarioSource
    run_dir: Path

    def snapshot(self, base: ExperimentConfig) -> ExperimentConfig:
        """Single-run config that reproduces this job."""
        return replace(base, agents=(replace(self.agent, episodes=None),), seeds=(self.seed,),
                       episodes=self.episodes, om_variants=(self.om_variant,), output_dir=str(self.run_dir),
                       n_jobs=1, sample_efficiency=False)


@dataclass
class RunResult:
    algorithm: str
    om_variant: OmVariant
    seed: int
    run_dir: Path
    ok: bool
    error: str | None = None


def make_env(scenario: ScenarioTable, algorithm: str, om_variant=OmVariant.DYNAMIC,
             horizon: int | None = None) -> DispatchEnv:
    spec = ActionSpec.discrete() if is_discrete(algorithm) else ActionSpec.continuous()
    return DispatchEnv(scenario, action_spec=spec, om_variant=om_variant, horizon=horizon)


def run_dir_for(out: Path, algorithm: str, variant: OmVariant, seed: int) -> Path:
    return Path(out) / algorithm / variant.value / f"seed_{seed}"


def _fit_rule(agent, env: DispatchEnv, episodes: int, writer: CurveWriter) -> TrainingCurve:
    # the rule search has no training; its deterministic score fills every episode row
    agent.fit(env)
    first = agent.curve_.episodes[0]
    curve = TrainingCurve()
    for ep in range(episodes):
        stats = EpisodeStats(ep, first.reward, first.gt_hours, first.gt_cycles)
        curve.append(stats)
        writer.write(stats)
    agent.curve_ = curve
    return curve


def run_one(job: RunJob, base: ExperimentConfig, scenario: ScenarioTable | None = None) -> RunResult:
    """Train one (algorithm, seed, variant) and write its run directory.

    Failures are recorded in a ``FAILED`` file instead of propagating.
    """
    d = Path(job.run_dir)
    d.mkdir(parents=True, exist_ok=True)
    (d / FAILED_MARKER).unlink(missing_ok=True)
    dump_config(job.snapshot(base), d / "config.yaml")
    algo = job.agent.algorithm
    try:
        table = scenario if scenario is not None else job.scenario.load()
        env = make_env(table, algo, job.om_variant, job.scenario.horizon)
        with CurveWriter(d / "episodes.csv") as writer:
            if algo == "rule":
                agent = make_agent(algo, **job.agent.params)
                _fit_rule(agent, env, job.episodes, writer)
            else:
                agent = make_agent(algo, episodes=job.episodes, seed=job.seed, **job.agent.params)
                agent.fit(env, callback=writer.write)
        ev = agent.evaluate(env)
        (d / "evaluation.json").write_text(json.dumps(
            {"reward_cad": ev.reward, "gt_hours": ev.gt_hours, "gt_cycles": ev.gt_cycles}))
        if hasattr(agent, "save"):
            agent.save(d)
    except Exception as exc:  # recorded, excluded from aggregation
        msg = f"{type(exc).__name__}: {exc}"
        (d / FAILED_MARKER).write_text(msg + "\n")
        warnings.warn(f"run {algo}/{job.om_variant.value}/seed {job.seed} aborted: {msg}", RuntimeWarning,
                      stacklevel=2)
        return RunResult(algo, job.om_variant, job.seed, d, False, msg)
    log.info("finished %s/%s seed %d: last reward %.0f", algo, job.om_variant.value, job.seed, ev.reward)
    return RunResult(algo, job.om_variant, job.seed, d, True)


def plan_jobs(config: ExperimentConfig) -> list[RunJob]:
    out = Path(config.output_dir)
    return [RunJob(agent, seed, config.episodes_for(agent), variant, config.scenario,
                   run_dir_for(out, agent.algorithm, variant, seed))
            for agent in config.agents for variant in config.om_variants for seed in config.seeds]


# --------------------------------------------------------------------------- metrics

@dataclass
class CellMetrics:
    """Aggregate over the completed seeds of one (algorithm, variant) cell."""

    algorithm: str
    om_variant: str
    seeds_completed: int
    seeds_configured: int
    accumulated_reward: float = math.nan
    sample_efficiency: float = math.nan
    final_reward: float = math.nan
    gt_hours_last10: float = math.nan
    gt_cycles_last10: float = math.nan
    gt_hours_final: float = math.nan
    gt_cycles_final: float = math.nan
    eval_reward: float = math.nan
    eval_gt_hours: float = math.nan
    eval_gt_cycles: float = math.nan
    curve_mean: np.ndarray = field(default_factory=lambda: np.zeros(0))
    curve_std: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def complete(self) -> bool:
        return self.seeds_completed == self.seeds_configured

    def row(self) -> list:
        def f(v):
            return "" if math.isnan(v) else repr(float(v))
        return [self.algorithm, self.om_variant, self.seeds_completed, self.seeds_configured, int(self.complete),
                f(self.accumulated_reward), f(self.accumulated_reward / 1e6), f(self.sample_efficiency),
                f(self.sample_efficiency / 1e6), f(self.final_reward), f(self.gt_hours_last10),
                f(self.gt_cycles_last10), f(self.gt_hours_final), f(self.gt_cycles_final), f(self.eval_reward),
                f(self.eval_gt_hours), f(self.eval_gt_cycles)]


@dataclass
class MetricsReport:
    cells: dict[tuple[str, str], CellMetrics]

    @property
    def complete(self) -> bool:
        return all(c.complete for c in self.cells.values())

    def __getitem__(self, key: tuple[str, str]) -> CellMetrics:
        algorithm, variant = key
        return self.cells[(algorithm, OmVariant.parse(variant).value)]


def accumulated_reward(curves) -> float:
    """Mean over runs of the mean over each run's final ten episodes."""
    return float(np.mean([np.mean(c[-ACCUMULATED_EPISODES:]) for c in curves]))


def sample_efficiency(curves) -> float:
    """Mean over runs of the mean over each run's first twenty episodes."""
    if any(len(c) < SAMPLE_EFFICIENCY_EPISODES for c in curves):
        return math.nan
    return float(np.mean([np.mean(c[:SAMPLE_EFFICIENCY_EPISODES]) for c in curves]))


def curve_statistics(curves) -> tuple[np.ndarray, np.ndarray]:
    """Per-episode mean and (population) standard deviation across runs."""
    M = np.asarray(curves, dtype=float)
    return M.mean(axis=0), M.std(axis=0)


def _cell(algorithm: str, variant: str, run_dirs: list[Path]) -> CellMetrics:
    done = []
    for d in sorted(run_dirs, key=lambda p: int(p.name.split("_")[1])):
        snap = load_config(d / "config.yaml")
        if (d / FAILED_MARKER).exists() or not (d / "episodes.csv").exists():
            continue
        curve = TrainingCurve.from_csv(d / "episodes.csv")
        if len(curve) != snap.episodes:
            continue
        ev = json.loads((d / "evaluation.json").read_text()) if (d / "evaluation.json").exists() else None
        done.append((curve, ev))
    cell = CellMetrics(algorithm, variant, len(done), len(run_dirs))
    if not done:
        return cell
    rewards = [c.rewards for c, _ in done]
    hours = [np.array([e.gt_hours for e in c], dtype=float) for c, _ in done]
    cycles = [np.array([e.gt_cycles for e in c], dtype=float) for c, _ in done]
    cell.accumulated_reward = accumulated_reward(rewards)
    cell.sample_efficiency = sample_efficiency(rewards)
    cell.final_reward = float(np.mean([r[-1] for r in rewards]))
    cell.gt_hours_last10 = accumulated_reward(hours)
    cell.gt_cycles_last10 = accumulated_reward(cycles)
    cell.gt_hours_final = float(np.mean([h[-1] for h in hours]))
    cell.gt_cycles_final = float(np.mean([c[-1] for c in cycles]))
    evals = [ev for _, ev in done if ev is not None]
    if len(evals) == len(done):
        cell.eval_reward = float(np.mean([e["reward_cad"] for e in evals]))
        cell.eval_gt_hours = float(np.mean([e["gt_hours"] for e in evals]))
        cell.eval_gt_cycles = float(np.mean([e["gt_cycles"] for e in evals]))
    if len({len(r) for r in rewards}) == 1:
        cell.curve_mean, cell.curve_std = curve_statistics(rewards)
    return cell


def build_report(out_dir) -> MetricsReport:
    """Recompute every metric from the run directories under ``out_dir`` and write the summaries."""
    out = Path(out_dir)
    groups: dict[tuple[str, str], list[Path]] = {}
    for cfg in sorted(out.glob("*/*/seed_*/config.yaml")):
        run = cfg.parent
        groups.setdefault((run.parent.parent.name, run.parent.name), []).append(run)
    cells = {key: _cell(*key, dirs) for key, dirs in sorted(groups.items())}
    with (out / "metrics.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRICS_HEADER)
        for cell in cells.values():
            w.writerow(cell.row())
    curves_dir = out / "curves"
    curves_dir.mkdir(exist_ok=True)
    for (algo, variant), cell in cells.items():
        with (curves_dir / f"{algo}_{variant}.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CURVE_AGG_HEADER)
            for ep, (m, s) in enumerate(zip(cell.curve_mean, cell.curve_std)):
                w.writerow([ep, repr(float(m)), repr(float(s)), repr(float(m - s)), repr(float(m + s)),
                            cell.seeds_completed])
    report = MetricsReport(cells)
    for cell in cells.values():
        if not cell.complete:
            warnings.warn(f"{cell.algorithm}/{cell.om_variant}: aggregated over {cell.seeds_completed} of "
                          f"{cell.seeds_configured} seeds", RuntimeWarning, stacklevel=2)
    return report


# --------------------------------------------------------------------------- experiments

def run_experiment(config: ExperimentConfig, n_jobs: int | None = None) -> tuple[MetricsReport, list[RunResult]]:
    """Train every (algorithm, variant, seed) job, then aggregate from the written CSVs."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    dump_config(config, out / "experiment.yaml")
    jobs = plan_jobs(config)
    n_jobs = config.n_jobs if n_jobs is None else n_jobs
    if n_jobs == 1:
        shared = config.scenario.load()
        results = [run_one(job, config, shared) for job in jobs]
    else:
        results = Parallel(n_jobs=n_jobs)(delayed(run_one)(job, config) for job in jobs)
    return build_report(out), list(results)


@dataclass
class OmComparison:
    """Per-cell hours/cycles and DYNAMIC-relative percentage increases.

    ``increases[(averaging, metric, variant)]`` holds the increase averaged
    over algorithms; ``per_algorithm`` keeps the individual values.
    Averaging is ``"last10"`` (final ten training episodes) or ``"final"``
    (last training episode).
    """

    report: MetricsReport
    increases: dict[tuple[str, str, str], float]
    per_algorithm: dict[tuple[str, str, str, str], float]


def _pct(new: float, ref: float) -> float:
    if ref == 0:
        return 0.0 if new == 0 else math.inf
    return 100.0 * (new - ref) / ref


def om_comparison(report: MetricsReport, out_dir=None) -> OmComparison:
    algos = sorted({a for a, _ in report.cells})
    base = OmVariant.DYNAMIC.value
    per, inc = {}, {}
    for averaging in ("last10", "final"):
        for metric in ("hours", "cycles"):
            attr = f"gt_{metric}_{averaging}"
            for variant in (OmVariant.HOURLY_ONLY.value, OmVariant.NO_VARIABLE.value):
                vals = []
                for a in algos:
                    if (a, variant) in report.cells and (a, base) in report.cells:
                        v = _pct(getattr(report.cells[(a, variant)], attr), getattr(report.cells[(a, base)], attr))
                        per[(a, averaging, metric, variant)] = v
                        vals.append(v)
                inc[(averaging, metric, variant)] = float(np.mean(vals)) if vals else math.nan
    result = OmComparison(report, inc, per)
    if out_dir is not None:
        write_om_comparison(result, out_dir)
    return result


def write_om_comparison(cmp: OmComparison, out_dir) -> Path:
    path = Path(out_dir) / "om_comparison.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("algorithm", "averaging", "metric", "om_variant", "increase_vs_dynamic_pct"))
        for (a, averaging, metric, variant), v in sorted(cmp.per_algorithm.items()):
            w.writerow([a, averaging, metric, variant, repr(v)])
        for (averaging, metric, variant), v in sorted(cmp.increases.items()):
            w.writerow(["mean", averaging, metric, variant, repr(v)])
    return path


def compare_om_variants(config: ExperimentConfig, episodes: int | None = COMPARE_OM_EPISODES,
                        n_jobs: int | None = None) -> tuple[OmComparison, list[RunResult]]:
    """Retrain every agent under all three O&M variants and compare hours and cycles."""
    config = replace(config, om_variants=tuple(OmVariant))
    if episodes is not None:
        config = config.with_overrides(episodes=episodes)
    report, results = run_experiment(config, n_jobs)
    return om_comparison(report, config.output_dir), results


def load_trained_agent(run_dir):
    """Rebuild a trained agent from a run directory written by :func:`run_one`."""
    d = Path(run_dir)
    snap = load_config(d / "config.yaml")
    agent_cfg = snap.agents[0]
    curve = TrainingCurve.from_csv(d / "episodes.csv") if (d / "episodes.csv").exists() else None
    if agent_cfg.algorithm == "rule":
        raise ConfigurationError("rule runs have no saved network; rerun the baseline search instead")
    agent = make_agent(agent_cfg.algorithm, episodes=snap.episodes, seed=snap.seeds[0], **agent_cfg.params)
    return agent.restore(d, curve), snap
