"""Cross-entropy method over the weights of a small deterministic policy network."""
from __future__ import annotations

import numpy as np

from ..env import DispatchEnv
from ..exceptions import ConfigurationError
from ..nn import Network, NetworkSpec, forward, init_params
from ..validation import check_fraction, check_positive_int
from .base import BaseAgent, EpisodeStats, TrainingCurve


class CEMAgent(BaseAgent):
    """Population search with a diagonal Gaussian over policy parameters.

    Each candidate plays one episode; the Gaussian is refitted to the elite
    fraction, with its standard deviation kept above ``std_floor``.  Every
    evaluated candidate counts as one training episode.  The best candidate
    seen is kept as the final policy.
    """

    discrete = False
    _network_attributes = ("policy_",)

    def __init__(self, episodes=250, population_size=20, elite_fraction=0.2, init_std=0.5, std_floor=0.02,
                 hidden_layers=(16,), activation="tanh", seed=0):
        self.episodes = episodes
        self.population_size = population_size
        self.elite_fraction = elite_fraction
        self.init_std = init_std
        self.std_floor = std_floor
        self.hidden_layers = hidden_layers
        self.activation = activation
        self.seed = seed

    def _play(self, env: DispatchEnv, params: np.ndarray, spec: NetworkSpec) -> EpisodeStats:
        obs = env.reset()
        total, hours, cycles, done = 0.0, 0, 0, False
        while not done:
            a = float(forward(spec, params, self._scale(obs))[0])
            res = env.step(min(max(a, 0.0), 1.0))
            total += res.reward
            hours += res.info["gt_on"]
            cycles += res.info["started"]
            obs, done = res.observation, res.done
        return EpisodeStats(-1, total, hours, cycles)

    def refit(self, population: np.ndarray, scores: np.ndarray):
        """Mean and floored std of the elite rows of ``population``."""
        n_elite = max(1, int(round(self.elite_fraction * len(scores))))
        elite = population[np.argsort(-scores, kind="stable")[:n_elite]]
        return elite.mean(axis=0), np.maximum(elite.std(axis=0), self.std_floor)

    def fit(self, env: DispatchEnv, callback=None):
        episodes = check_positive_int(self.episodes, "episodes")
        pop = check_positive_int(self.population_size, "population_size", minimum=2)
        check_fraction(self.elite_fraction, "elite_fraction", closed_low=False)
        if self.std_floor <= 0:
            raise ConfigurationError("std_floor must be positive")
        self._prepare(env)
        rng = np.random.default_rng(self.seed)
        spec = NetworkSpec(6, tuple(self.hidden_layers), self.activation, 1, "linear")
        self.spec_ = spec
        mu = init_params(spec, rng)
        std = np.maximum(np.full(spec.n_params, float(self.init_std)), self.std_floor)
        self.curve_ = TrainingCurve()
        self.best_params_, self.best_reward_ = mu.copy(), -np.inf
        self.generation_best_ = []
        ep = 0
        while ep < episodes:
            n = min(pop, episodes - ep)
            population = mu + std * rng.standard_normal((n, spec.n_params))
            scores = np.empty(n)
            for i in range(n):
                stats = self._play(env, population[i], spec)
                stats.episode = ep
                scores[i] = stats.reward
                self.curve_.append(stats)
                if callback is not None:
                    callback(stats)
                if stats.reward > self.best_reward_:
                    self.best_reward_, self.best_params_ = stats.reward, population[i].copy()
                ep += 1
            self.generation_best_.append(self.best_reward_)
            mu, std = self.refit(population, scores)
        self.mean_, self.std_ = mu, std
        self.policy_ = Network(spec, self.best_params_)
        return self

    def _greedy_actions(self, Z):
        return np.clip(self.policy_(Z)[:, 0], 0.0, 1.0)
