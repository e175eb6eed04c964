"""Shared agent machinery: episode statistics, training curves, estimator base."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..env import DispatchEnv, ObservationScaler, scenario_observations
from ..exceptions import ConfigurationError, TrainingError
from ..nn import Network, load_checkpoint, save_checkpoint
from ..validation import check_observations

CURVE_HEADER = ("episode", "reward_cad", "gt_hours", "gt_cycles", "epsilon")


@dataclass
class EpisodeStats:
    episode: int
    reward: float  # C$
    gt_hours: int
    gt_cycles: int
    epsilon: float = math.nan


@dataclass
class TrainingCurve:
    episodes: list[EpisodeStats] = field(default_factory=list)

    def append(self, stats: EpisodeStats):
        self.episodes.append(stats)

    def __len__(self) -> int:
        return len(self.episodes)

    def __iter__(self):
        return iter(self.episodes)

    @property
    def rewards(self) -> np.ndarray:
        return np.array([e.reward for e in self.episodes])

    def to_csv(self, path) -> Path:
        """Write ``episode,reward_cad,gt_hours,gt_cycles,epsilon``; epsilon is blank when unused."""
        with CurveWriter(path) as w:
            for e in self.episodes:
                w.write(e)
        return Path(path)

    @classmethod
    def from_csv(cls, path) -> "TrainingCurve":
        curve = cls()
        with Path(path).open(newline="") as fh:
            for row in csv.DictReader(fh):
                eps = row["epsilon"]
                curve.append(EpisodeStats(int(row["episode"]), float(row["reward_cad"]), int(row["gt_hours"]),
                                          int(row["gt_cycles"]), float(eps) if eps else math.nan))
        return curve


def curve_row(e: EpisodeStats) -> list:
    eps = "" if math.isnan(e.epsilon) else repr(float(e.epsilon))
    return [e.episode, repr(float(e.reward)), e.gt_hours, e.gt_cycles, eps]


class CurveWriter:
    """Streams episode rows to CSV as training proceeds (flushed per row)."""

    def __init__(self, path):
        self.path = Path(path)
        self._fh = self.path.open("w", newline="")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(CURVE_HEADER)

    def write(self, stats: EpisodeStats):
        self._w.writerow(curve_row(stats))
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def check_finite_loss(value: float, what: str = "loss") -> float:
    if not math.isfinite(value):
        raise TrainingError(f"non-finite {what} encountered ({value})")
    return value


class BaseAgent(BaseEstimator):
    """Estimator-style agent.

    ``fit(env)`` trains against a :class:`DispatchEnv` and sets ``curve_``;
    ``predict(X)`` maps raw observations (rows of six features) to load
    fractions with the deterministic greedy/mean policy; ``evaluate(env)``
    plays one deterministic episode.
    """

    #: whether the agent emits discrete level indices
    discrete = True
    #: fitted :class:`Network` attributes written by :meth:`save`
    _network_attributes: tuple[str, ...] = ()

    def _prepare(self, env: DispatchEnv):
        self._set_scaling(ObservationScaler().fit(scenario_observations(env.scenario)),
                          env.action_spec.discrete_levels)

    def _set_scaling(self, scaler: ObservationScaler, levels):
        self.scaler_ = scaler
        self.levels_ = np.asarray(levels, dtype=float)
        self._lo = self.scaler_.data_min_
        span = self.scaler_.data_max_ - self.scaler_.data_min_
        self._span_ok = span > 0
        self._span = np.where(self._span_ok, span, 1.0)

    def _scale(self, obs: np.ndarray) -> np.ndarray:
        """Fast single-observation scaling (same map as the fitted scaler)."""
        out = np.empty(6)
        out[:5] = np.where(self._span_ok, (obs[:5] - self._lo) / self._span, 0.0)
        out[5] = obs[5] * 0.5
        return out

    def _scale_batch(self, X: np.ndarray) -> np.ndarray:
        return self.scaler_.transform(X)

    def _greedy_actions(self, Z: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def predict(self, X) -> np.ndarray:
        """Deterministic raw actions in [0, 1] for raw observations ``X``."""
        check_is_fitted(self, "curve_")
        X = check_observations(X)
        return self._greedy_actions(self._scale_batch(X))

    def act(self, obs) -> float:
        check_is_fitted(self, "curve_")
        return float(self._greedy_actions(self._scale(np.asarray(obs, dtype=float))[None, :])[0])

    def evaluate(self, env: DispatchEnv) -> EpisodeStats:
        """Play one deterministic episode and return its statistics."""
        check_is_fitted(self, "curve_")
        obs = env.reset()
        total, hours, cycles = 0.0, 0, 0
        done = False
        while not done:
            res = env.step(self.act(obs))
            total += res.reward
            hours += res.info["gt_on"]
            cycles += res.info["started"]
            obs, done = res.observation, res.done
        return EpisodeStats(-1, total, hours, cycles)


    def save(self, directory) -> list[Path]:
        """Write network checkpoints and the observation scaling to ``directory``."""
        check_is_fitted(self, "curve_")
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        paths = []
        for name in self._network_attributes:
            net = getattr(self, name)
            paths.append(save_checkpoint(d / f"{name.rstrip('_')}.txt", net.spec, net.params))
        scaling = {"data_min": self.scaler_.data_min_.tolist(), "data_max": self.scaler_.data_max_.tolist(),
                   "levels": self.levels_.tolist()}
        paths.append(d / "scaling.json")
        paths[-1].write_text(json.dumps(scaling))
        return paths

    def restore(self, directory, curve: TrainingCurve | None = None):
        """Load what :meth:`save` wrote; the agent can then act and evaluate."""
        d = Path(directory)
        try:
            scaling = json.loads((d / "scaling.json").read_text())
        except FileNotFoundError:
            raise ConfigurationError(f"{d} holds no saved agent") from None
        scaler = ObservationScaler()
        scaler.data_min_ = np.asarray(scaling["data_min"], dtype=float)
        scaler.data_max_ = np.asarray(scaling["data_max"], dtype=float)
        self._set_scaling(scaler, scaling["levels"])
        for name in self._network_attributes:
            spec, params = load_checkpoint(d / f"{name.rstrip('_')}.txt")
            setattr(self, name, Network(spec, params))
        self.curve_ = curve if curve is not None else TrainingCurve()
        return self


REWARD_OFFSETS = ("none", "grid")


def reward_offsets(env: DispatchEnv, kind: str) -> np.ndarray:
    """Per-hour additive reward offset in C$.

    ``"grid"`` adds back the cost of the all-grid hour (purchases plus fixed
    O&M), so the learning signal becomes savings against never running the
    GT.  The offset depends only on exogenous data, hence it shifts every
    policy's return by the same amount and leaves the optimum unchanged.
    """
    if kind == "none":
        return np.zeros(len(env.scenario))
    if kind == "grid":
        sc = env.scenario
        return np.asarray(sc.price) * np.asarray(sc.demand) + env.om_params.fixed_hourly
    raise ValueError(f"reward_offset must be one of {REWARD_OFFSETS}, got {kind!r}")
