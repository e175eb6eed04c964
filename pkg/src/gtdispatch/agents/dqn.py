"""Deep Q-network with uniform experience replay and a periodically synced target."""
from __future__ import annotations

import numpy as np

from ..env import DispatchEnv
from ..nn import Adam, AdamHyper, Network, NetworkSpec
from ..validation import check_positive_int
from .base import BaseAgent, EpisodeStats, TrainingCurve, check_finite_loss, reward_offsets


def epsilon_schedule(episode: int, episodes: int, start: float = 0.8, end: float = 0.001,
                     fixed_final: int = 10) -> float:
    """Per-episode exploration rate.

    Linear from ``start`` at episode 0 down to ``end`` at episode
    ``episodes - fixed_final``; held at exactly ``end`` for the last
    ``fixed_final`` episodes.
    """
    n_decay = episodes - fixed_final
    if episode >= n_decay:
        return end
    return start + (end - start) * episode / n_decay


class ReplayBuffer:
    """Fixed-capacity ring buffer of transitions stored in flat arrays."""

    def __init__(self, capacity: int, obs_dim: int = 6):
        self.capacity = capacity
        self.s = np.zeros((capacity, obs_dim))
        self.a = np.zeros(capacity, dtype=np.int64)
        self.r = np.zeros(capacity)
        self.s2 = np.zeros((capacity, obs_dim))
        self.done = np.zeros(capacity)
        self.size = 0
        self._pos = 0

    def add(self, s, a, r, s2, done):
        i = self._pos
        self.s[i], self.a[i], self.r[i], self.s2[i], self.done[i] = s, a, r, s2, done
        self._pos = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, rng: np.random.Generator, batch_size: int):
        idx = rng.integers(0, self.size, size=batch_size)
        return self.s[idx], self.a[idx], self.r[idx], self.s2[idx], self.done[idx]

    def __len__(self) -> int:
        return self.size


class DQNAgent(BaseAgent):
    """Epsilon-greedy DQN over the discrete load levels.

    Exploration decays linearly per episode from ``epsilon_start`` to
    ``epsilon_end`` and stays at ``epsilon_end`` for the final
    ``epsilon_fixed_episodes`` episodes.  Gradient updates begin once
    ``learning_starts`` transitions are stored.
    """

    _network_attributes = ("q_network_",)

    def __init__(self, episodes=250, gamma=0.9, learning_rate=1e-3, hidden_layers=(64, 64), activation="tanh",
                 batch_size=64, replay_capacity=100_000, learning_starts=1000, target_sync=2000, train_freq=1,
                 epsilon_start=0.8, epsilon_end=0.001, epsilon_fixed_episodes=10, huber_delta=10.0,
                 reward_offset="grid", max_grad_norm=10.0, seed=0):
        self.episodes = episodes
        self.gamma = gamma
        self.learning_rate = learning_rate
        self.hidden_layers = hidden_layers
        self.activation = activation
        self.batch_size = batch_size
        self.replay_capacity = replay_capacity
        self.learning_starts = learning_starts
        self.target_sync = target_sync
        self.train_freq = train_freq
        self.epsilon_start = epsilon_start
        self.epsilon_end = epsilon_end
        self.epsilon_fixed_episodes = epsilon_fixed_episodes
        self.huber_delta = huber_delta
        self.reward_offset = reward_offset
        self.max_grad_norm = max_grad_norm
        self.seed = seed

    def epsilon(self, episode: int) -> float:
        return epsilon_schedule(episode, self.episodes, self.epsilon_start, self.epsilon_end,
                                self.epsilon_fixed_episodes)

    def _update(self, rng, buffer: ReplayBuffer, opt: Adam, target: Network):
        s, a, r, s2, done = buffer.sample(rng, self.batch_size)
        q_next = target(s2).max(axis=1)
        y = r + self.gamma * (1.0 - done) * q_next
        q, cache = self.q_network_.forward_cached(s)
        rows = np.arange(len(a))
        td = q[rows, a] - y
        d = self.huber_delta
        loss = float(np.mean(np.where(np.abs(td) <= d, 0.5 * td * td, d * (np.abs(td) - 0.5 * d))))
        check_finite_loss(loss, "TD loss")
        g = np.zeros_like(q)
        g[rows, a] = np.clip(td, -d, d) / len(a)
        opt.step(self.q_network_.backward_cached(cache, g))

    def fit(self, env: DispatchEnv, callback=None):
        """Train on ``env``; ``callback(stats)`` is invoked after each episode."""
        episodes = check_positive_int(self.episodes, "episodes")
        self._prepare(env)
        rng = np.random.default_rng(self.seed)
        k = len(self.levels_)
        spec = NetworkSpec(6, tuple(self.hidden_layers), self.activation, k, "linear")
        self.q_network_ = Network.create(spec, rng)
        target = self.q_network_.copy()
        opt = Adam(self.q_network_, AdamHyper(self.learning_rate, max_grad_norm=self.max_grad_norm))
        buffer = ReplayBuffer(int(self.replay_capacity))
        offsets = reward_offsets(env, self.reward_offset).tolist()
        scale = env.reward_scale
        levels = self.levels_.tolist()
        self.curve_ = TrainingCurve()
        steps = 0
        for ep in range(episodes):
            eps = self.epsilon(ep)
            obs = env.reset()
            z = self._scale(obs)
            total, hours, cycles, done = 0.0, 0, 0, False
            while not done:
                if rng.random() < eps:
                    a = int(rng.integers(k))
                else:
                    a = int(np.argmax(self.q_network_(z)))
                t = env.hour
                res = env.step(levels[a])
                done = res.done
                z2 = self._scale(res.observation)
                buffer.add(z, a, (res.reward + offsets[t]) * scale, z2, float(done))
                total += res.reward
                hours += res.info["gt_on"]
                cycles += res.info["started"]
                z = z2
                steps += 1
                if len(buffer) >= self.learning_starts and steps % self.train_freq == 0:
                    self._update(rng, buffer, opt, target)
                if steps % self.target_sync == 0:
                    target = self.q_network_.copy()
            stats = EpisodeStats(ep, total, hours, cycles, eps)
            self.curve_.append(stats)
            if callback is not None:
                callback(stats)
        return self

    def q_values(self, X) -> np.ndarray:
        return self.q_network_(self._scale_batch(np.asarray(X, dtype=float)))

    def predict_index(self, X) -> np.ndarray:
        from ..validation import check_observations
        return np.argmax(self.q_network_(self._scale_batch(check_observations(X))), axis=1)

    def _greedy_actions(self, Z):
        return self.levels_[np.argmax(self.q_network_(Z), axis=1)]
