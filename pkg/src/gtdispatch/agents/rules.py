"""Single if-then-else dispatch rules and their exhaustive grid search.

A rule switches the GT to baseload (100 %) when its condition on the
observed pool price and demand holds and turns it off otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..env import DispatchEnv, schedule_cost
from ..exceptions import DomainError
from ..validation import check_observations
from .base import EpisodeStats, TrainingCurve

#: conditions in order of increasing complexity (used for tie-breaking)
CONDITIONS = ("price", "demand", "and", "or")

DEFAULT_PRICE_GRID = tuple(float(x) for x in range(0, 201, 5)) + (math.inf,)
DEFAULT_DEMAND_GRID = tuple(float(x) for x in range(0, 31, 2))


@dataclass(frozen=True)
class Rule:
    condition: str
    price_threshold: float = math.inf
    demand_threshold: float = math.inf

    def __post_init__(self):
        if self.condition not in CONDITIONS:
            raise DomainError(f"condition must be one of {CONDITIONS}")

    def holds(self, price, demand):
        p = np.asarray(price) > self.price_threshold
        d = np.asarray(demand) > self.demand_threshold
        if self.condition == "price":
            return p
        if self.condition == "demand":
            return d
        if self.condition == "and":
            return p & d
        return p | d

    def sort_key(self) -> tuple:
        used_p = self.condition in ("price", "and", "or")
        used_d = self.condition in ("demand", "and", "or")
        return (CONDITIONS.index(self.condition), self.price_threshold if used_p else 0.0,
                self.demand_threshold if used_d else 0.0)

    def __str__(self) -> str:
        p, d = f"price > {self.price_threshold:g}", f"demand > {self.demand_threshold:g}"
        return {"price": p, "demand": d, "and": f"{p} AND {d}", "or": f"{p} OR {d}"}[self.condition]


def candidate_rules(price_grid, demand_grid) -> list[Rule]:
    price_grid = sorted(float(x) for x in price_grid)
    demand_grid = sorted(float(x) for x in demand_grid)
    if not price_grid or not demand_grid:
        raise DomainError("threshold grids must be non-empty")
    rules = [Rule("price", p) for p in price_grid]
    rules += [Rule("demand", demand_threshold=d) for d in demand_grid]
    rules += [Rule(c, p, d) for c in ("and", "or") for p in price_grid for d in demand_grid]
    return rules


def play_rule(env: DispatchEnv, rule: Rule) -> EpisodeStats:
    """Evaluate a rule for one episode through the environment."""
    obs = env.reset()
    total, hours, cycles, done = 0.0, 0, 0, False
    while not done:
        res = env.step(1.0 if rule.holds(obs[0], obs[1]) else 0.0)
        total += res.reward
        hours += res.info["gt_on"]
        cycles += res.info["started"]
        obs, done = res.observation, res.done
    return EpisodeStats(-1, total, hours, cycles)


def search_rules(env: DispatchEnv, price_grid=DEFAULT_PRICE_GRID, demand_grid=DEFAULT_DEMAND_GRID):
    """Best rule over the grids and its episodic reward (C$).

    Every candidate is scored over one episode with the vectorised schedule
    evaluator (rules ignore the GT state, so each is an open-loop schedule);
    the winner is replayed through the environment for the reported score.
    Ties go to the simpler condition (price, demand, AND, OR), then to lower
    thresholds.
    """
    sc = env.scenario
    if env.action_spec.resolve(1.0) != 1.0 or env.action_spec.resolve(0.0) != 0.0:
        raise DomainError("action spec must map 1.0 to baseload and 0.0 to off")
    best, best_score, cache = None, -math.inf, {}
    for rule in sorted(candidate_rules(price_grid, demand_grid), key=Rule.sort_key):
        on = rule.holds(sc.price, sc.demand)
        key = np.packbits(on).tobytes()
        if key not in cache:
            cache[key] = -schedule_cost(env, on.astype(float))["cost"]
        score = cache[key]
        if score > best_score:
            best, best_score = rule, score
    return best, play_rule(env, best).reward


class RuleBaseline(BaseEstimator):
    """Estimator wrapper: ``fit`` searches the grids, ``predict`` applies the best rule."""

    def __init__(self, price_grid=DEFAULT_PRICE_GRID, demand_grid=DEFAULT_DEMAND_GRID):
        self.price_grid = price_grid
        self.demand_grid = demand_grid

    def fit(self, env: DispatchEnv):
        self.rule_, self.score_ = search_rules(env, self.price_grid, self.demand_grid)
        stats = play_rule(env, self.rule_)
        self.curve_ = TrainingCurve([EpisodeStats(0, stats.reward, stats.gt_hours, stats.gt_cycles)])
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "rule_")
        X = check_observations(X)
        return np.where(self.rule_.holds(X[:, 0], X[:, 1]), 1.0, 0.0)

    def act(self, obs) -> float:
        return float(self.predict(np.asarray(obs)[None, :])[0])

    def evaluate(self, env: DispatchEnv) -> EpisodeStats:
        check_is_fitted(self, "rule_")
        return play_rule(env, self.rule_)
