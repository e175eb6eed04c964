"""Proximal policy optimisation with a Gaussian actor and a separate critic."""
from __future__ import annotations

import math

import numpy as np

from ..env import DispatchEnv
from ..nn import Adam, AdamHyper, Network, NetworkSpec
from ..validation import check_positive_int
from .base import BaseAgent, EpisodeStats, TrainingCurve, check_finite_loss, reward_offsets

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def gaussian_log_prob(a, mean, log_std):
    z = (a - mean) * np.exp(-log_std)
    return -0.5 * z * z - log_std - LOG_SQRT_2PI


def gae(rewards, values, next_values, dones, gamma: float, lam: float):
    """Generalised advantage estimates and the matching return targets."""
    n = len(rewards)
    adv = np.zeros(n)
    last = 0.0
    for t in range(n - 1, -1, -1):
        nonterminal = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_values[t] * nonterminal - values[t]
        last = delta + gamma * lam * nonterminal * last
        adv[t] = last
    return adv, adv + values


def clipped_surrogate_grad(ratio, advantage, clip_ratio: float):
    """Per-sample derivative of ``-min(r A, clip(r) A)`` with respect to log-prob."""
    unclipped = np.where(advantage >= 0, ratio <= 1.0 + clip_ratio, ratio >= 1.0 - clip_ratio)
    return np.where(unclipped, -ratio * advantage, 0.0)


class PPOAgent(BaseAgent):
    """Actor-critic PPO for the continuous load action.

    Log-probabilities are taken on the raw Gaussian sample; the environment
    clamps it to [0, 1] and applies the off-threshold.  One update runs
    ``epochs`` passes of minibatch Adam over the last ``rollout_episodes``
    episodes.
    """

    discrete = False
    _network_attributes = ("actor_", "critic_")

    def __init__(self, episodes=250, gamma=0.99, gae_lambda=0.95, clip_ratio=0.2, actor_lr=3e-4, critic_lr=1e-3,
                 epochs=10, minibatch_size=256, hidden_layers=(64, 64), activation="tanh", init_log_std=-0.7,
                 init_mean=0.0, entropy_coef=0.0, rollout_episodes=1, normalize_advantages=True, reward_offset="grid",
                 max_grad_norm=0.5, seed=0):
        self.episodes = episodes
        self.gamma = gamma
        self.gae_lambda = gae_lambda
        self.clip_ratio = clip_ratio
        self.actor_lr = actor_lr
        self.critic_lr = critic_lr
        self.epochs = epochs
        self.minibatch_size = minibatch_size
        self.hidden_layers = hidden_layers
        self.activation = activation
        self.init_log_std = init_log_std
        self.init_mean = init_mean
        self.entropy_coef = entropy_coef
        self.rollout_episodes = rollout_episodes
        self.normalize_advantages = normalize_advantages
        self.reward_offset = reward_offset
        self.max_grad_norm = max_grad_norm
        self.seed = seed

    def _update(self, rng, batch, actor_opt: Adam, critic_opt: Adam):
        S, A, logp_old, adv, ret = batch
        if self.normalize_advantages and len(adv) > 1:
            adv = (adv - adv.mean()) / (adv.std() + 1e-8)
        n = len(A)
        mb = min(int(self.minibatch_size), n)
        for _ in range(int(self.epochs)):
            order = rng.permutation(n)
            for start in range(0, n, mb):
                idx = order[start:start + mb]
                m = len(idx)
                out, cache = self.actor_.forward_cached(S[idx])
                mean, log_std = out[:, 0], out[:, 1]
                logp = gaussian_log_prob(A[idx], mean, log_std)
                ratio = np.exp(logp - logp_old[idx])
                check_finite_loss(float(ratio.sum()), "policy ratio")
                dlogp = clipped_surrogate_grad(ratio, adv[idx], self.clip_ratio) / m
                inv_var = np.exp(-2.0 * log_std)
                diff = A[idx] - mean
                g = np.empty((m, 2))
                g[:, 0] = dlogp * diff * inv_var
                g[:, 1] = dlogp * (diff * diff * inv_var - 1.0) - self.entropy_coef / m
                actor_opt.step(self.actor_.backward_cached(cache, g))

                v, vcache = self.critic_.forward_cached(S[idx])
                err = v[:, 0] - ret[idx]
                check_finite_loss(float(err @ err), "value loss")
                critic_opt.step(self.critic_.backward_cached(vcache, (err / m)[:, None]))

    def fit(self, env: DispatchEnv, callback=None):
        episodes = check_positive_int(self.episodes, "episodes")
        self._prepare(env)
        rng = np.random.default_rng(self.seed)
        hidden = tuple(self.hidden_layers)
        self.actor_ = Network.create(NetworkSpec(6, hidden, self.activation, 1, "gaussian", self.init_log_std),
                                     rng, output_scale=0.01)
        self.actor_.params[self.actor_.spec.layout()[-1][1]] = self.init_mean
        self.critic_ = Network.create(NetworkSpec(6, hidden, self.activation, 1, "linear"), rng)
        actor_opt = Adam(self.actor_, AdamHyper(self.actor_lr, max_grad_norm=self.max_grad_norm))
        critic_opt = Adam(self.critic_, AdamHyper(self.critic_lr, max_grad_norm=self.max_grad_norm))
        offsets = reward_offsets(env, self.reward_offset).tolist()
        scale = env.reward_scale
        self.curve_ = TrainingCurve()
        buf = {k: [] for k in ("s", "a", "logp", "r", "s2", "done")}
        for ep in range(episodes):
            obs = env.reset()
            z = self._scale(obs)
            total, hours, cycles, done = 0.0, 0, 0, False
            while not done:
                mean, log_std = self.actor_(z)
                a = mean + math.exp(log_std) * rng.standard_normal()
                t = env.hour
                res = env.step(min(max(a, 0.0), 1.0))
                done = res.done
                z2 = self._scale(res.observation)
                buf["s"].append(z)
                buf["a"].append(a)
                buf["logp"].append(float(gaussian_log_prob(a, mean, log_std)))
                buf["r"].append((res.reward + offsets[t]) * scale)
                buf["s2"].append(z2)
                buf["done"].append(float(done))
                total += res.reward
                hours += res.info["gt_on"]
                cycles += res.info["started"]
                z = z2
            stats = EpisodeStats(ep, total, hours, cycles)
            self.curve_.append(stats)
            if callback is not None:
                callback(stats)
            if (ep + 1) % int(self.rollout_episodes) == 0 or ep == episodes - 1:
                S = np.array(buf["s"])
                values = self.critic_(S)[:, 0]
                next_values = self.critic_(np.array(buf["s2"]))[:, 0]
                adv, ret = gae(np.array(buf["r"]), values, next_values, np.array(buf["done"]),
                               self.gamma, self.gae_lambda)
                self._update(rng, (S, np.array(buf["a"]), np.array(buf["logp"]), adv, ret), actor_opt, critic_opt)
                buf = {k: [] for k in buf}
        return self

    def value(self, X) -> np.ndarray:
        return self.critic_(self._scale_batch(np.asarray(X, dtype=float)))[:, 0]

    def _greedy_actions(self, Z):
        return np.clip(self.actor_(Z)[:, 0], 0.0, 1.0)
