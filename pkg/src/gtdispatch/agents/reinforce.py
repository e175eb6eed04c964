"""REINFORCE: Monte-Carlo policy gradient without a baseline."""
from __future__ import annotations

import math

import numpy as np

from ..env import DispatchEnv
from ..nn import Adam, AdamHyper, Network, NetworkSpec
from ..validation import check_positive_int
from .base import BaseAgent, EpisodeStats, TrainingCurve, check_finite_loss, reward_offsets
from .ppo import gaussian_log_prob


def discounted_returns(rewards, gamma: float) -> np.ndarray:
    out = np.empty(len(rewards))
    acc = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        out[t] = acc
    return out


def reinforce_output_gradient(outputs: np.ndarray, actions: np.ndarray, returns: np.ndarray,
                              discrete: bool) -> np.ndarray:
    """Network output gradient of ``sum_t G_t log pi(a_t | s_t)``.

    ``outputs`` are softmax probabilities (discrete) or ``[mean, log_std]``
    rows (Gaussian).
    """
    n = len(actions)
    if discrete:
        g = np.zeros_like(outputs)
        rows = np.arange(n)
        g[rows, actions] = returns / outputs[rows, actions]
        return g
    mean, log_std = outputs[:, 0], outputs[:, 1]
    inv_var = np.exp(-2.0 * log_std)
    diff = actions - mean
    return np.column_stack([returns * diff * inv_var, returns * (diff * diff * inv_var - 1.0)])


class ReinforceAgent(BaseAgent):
    """Single policy network trained on full-episode returns.

    ``discrete=True`` uses a softmax over the load levels; otherwise a
    Gaussian head whose raw sample is clamped by the environment.
    """

    _network_attributes = ("policy_",)

    def __init__(self, discrete=True, episodes=250, gamma=0.99, learning_rate=1e-3, hidden_layers=(64, 64),
                 activation="tanh", init_log_std=-0.7, reward_offset="none", max_grad_norm=None, seed=0):
        self.discrete = discrete
        self.episodes = episodes
        self.gamma = gamma
        self.learning_rate = learning_rate
        self.hidden_layers = hidden_layers
        self.activation = activation
        self.init_log_std = init_log_std
        self.reward_offset = reward_offset
        self.max_grad_norm = max_grad_norm
        self.seed = seed

    def _spec(self, k: int) -> NetworkSpec:
        if self.discrete:
            return NetworkSpec(6, tuple(self.hidden_layers), self.activation, k, "softmax")
        return NetworkSpec(6, tuple(self.hidden_layers), self.activation, 1, "gaussian", self.init_log_std)

    def policy_gradient(self, S, actions, returns) -> np.ndarray:
        """Ascent direction ``sum_t G_t grad log pi(a_t | s_t)`` for a batch."""
        out, cache = self.policy_.forward_cached(np.asarray(S, dtype=float))
        g = reinforce_output_gradient(out, np.asarray(actions), np.asarray(returns, dtype=float), self.discrete)
        return self.policy_.backward_cached(cache, g)

    def fit(self, env: DispatchEnv, callback=None):
        episodes = check_positive_int(self.episodes, "episodes")
        self._prepare(env)
        rng = np.random.default_rng(self.seed)
        k = len(self.levels_)
        self.policy_ = Network.create(self._spec(k), rng, output_scale=0.01)
        opt = Adam(self.policy_, AdamHyper(self.learning_rate, max_grad_norm=self.max_grad_norm))
        offsets = reward_offsets(env, self.reward_offset).tolist()
        scale = env.reward_scale
        levels = self.levels_.tolist()
        self.curve_ = TrainingCurve()
        for ep in range(episodes):
            obs = env.reset()
            z = self._scale(obs)
            S, acts, rews = [], [], []
            total, hours, cycles, done = 0.0, 0, 0, False
            while not done:
                out = self.policy_(z)
                if self.discrete:
                    a = int(rng.choice(k, p=out))
                    raw = levels[a]
                else:
                    a = out[0] + math.exp(out[1]) * rng.standard_normal()
                    raw = min(max(a, 0.0), 1.0)
                t = env.hour
                res = env.step(raw)
                S.append(z)
                acts.append(a)
                rews.append((res.reward + offsets[t]) * scale)
                total += res.reward
                hours += res.info["gt_on"]
                cycles += res.info["started"]
                z, done = self._scale(res.observation), res.done
            G = discounted_returns(rews, self.gamma)
            grad = self.policy_gradient(np.array(S), np.array(acts), G)
            check_finite_loss(float(grad @ grad), "policy gradient")
            opt.step(-grad)
            stats = EpisodeStats(ep, total, hours, cycles)
            self.curve_.append(stats)
            if callback is not None:
                callback(stats)
        return self

    def action_probabilities(self, X) -> np.ndarray:
        if not self.discrete:
            raise AttributeError("only the discrete policy has action probabilities")
        return self.policy_(self._scale_batch(np.asarray(X, dtype=float)))

    def _greedy_actions(self, Z):
        out = self.policy_(Z)
        if self.discrete:
            return self.levels_[np.argmax(out, axis=1)]
        return np.clip(out[:, 0], 0.0, 1.0)
