"""Learning agents and the rule-search baseline."""
from .base import BaseAgent, CurveWriter, EpisodeStats, TrainingCurve
from .cem import CEMAgent
from .dqn import DQNAgent, epsilon_schedule
from .ppo import PPOAgent
from .reinforce import ReinforceAgent
from .rules import Rule, RuleBaseline, search_rules

#: name -> (factory, acts on the discrete level set)
AGENTS = {
    "dqn": (DQNAgent, True),
    "ppo": (PPOAgent, False),
    "reinforce": (ReinforceAgent, True),
    "reinforce_continuous": (lambda **kw: ReinforceAgent(discrete=False, **kw), False),
    "cem": (CEMAgent, False),
    "rule": (RuleBaseline, True),
}


def register_agent(name: str, factory, discrete: bool = True):
    """Make an extra agent available to the experiment harness."""
    AGENTS[name] = (factory, discrete)


def make_agent(algorithm: str, **params):
    """Instantiate an agent by name; unknown parameters raise ``TypeError``."""
    try:
        factory, _ = AGENTS[algorithm]
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {sorted(AGENTS)}") from None
    return factory(**params)


def is_discrete(algorithm: str) -> bool:
    return AGENTS[algorithm][1]


__all__ = ["AGENTS", "BaseAgent", "CEMAgent", "CurveWriter", "DQNAgent", "EpisodeStats", "PPOAgent", "ReinforceAgent",
           "Rule", "RuleBaseline", "TrainingCurve", "epsilon_schedule", "is_discrete", "make_agent", "register_agent",
           "search_rules"]
