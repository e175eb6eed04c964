"""Experiment configuration read from and written to YAML.

A config file looks like::

    scenario:
      seed: 0              # synthetic year; or `directory: path/to/csvs`
      window: [336, 336]   # optional (start hour, length)
    seeds: [0, 1, 2, 3, 4]
    episodes: 250
    om_variants: [dynamic]
    output_dir: runs
    n_jobs: 1
    agents:
      - algorithm: dqn
        episodes: 20       # optional per-agent override
        params: {gamma: 0.9}
      - algorithm: ppo

Command-line flags override the top-level keys.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .agents import AGENTS
from .costs import OmVariant
from .exceptions import ConfigurationError
from .scenario import HOURS_PER_YEAR, ScenarioTable, generate_scenario, load_scenario_dir

SAMPLE_EFFICIENCY_EPISODES = 20
ACCUMULATED_EPISODES = 10


@dataclass(frozen=True)
class ScenarioSource:
    """Where the hourly inputs come from: a synthetic seed or a CSV directory."""

    seed: int | None = 0
    directory: str | None = None
    window: tuple[int, int] | None = None

    def __post_init__(self):
        if (self.seed is None) == (self.directory is None):
            raise ConfigurationError("scenario needs exactly one of 'seed' or 'directory'")
        if self.window is not None:
            w = tuple(int(v) for v in self.window)
            if len(w) != 2 or w[0] < 0 or w[1] < 1:
                raise ConfigurationError("scenario window must be [start, hours] with hours >= 1")
            object.__setattr__(self, "window", w)

    @property
    def horizon(self) -> int | None:
        """Environment horizon: a full year unless a window is cut out."""
        return HOURS_PER_YEAR if self.window is None else None

    def load(self) -> ScenarioTable:
        if self.directory is not None:
            table = load_scenario_dir(self.directory)
        else:
            table = generate_scenario(int(self.seed))
        if self.window is not None:
            table = table.window(*self.window)
        return table

    def to_dict(self) -> dict:
        out = {"seed": self.seed} if self.directory is None else {"directory": str(self.directory)}
        if self.window is not None:
            out["window"] = list(self.window)
        return out

    @classmethod
    def from_dict(cls, data: dict | None) -> "ScenarioSource":
        data = dict(data or {"seed": 0})
        unknown = set(data) - {"seed", "directory", "window"}
        if unknown:
            raise ConfigurationError(f"unknown scenario keys: {sorted(unknown)}")
        if "directory" in data and "seed" not in data:
            data["seed"] = None
        return cls(seed=data.get("seed"), directory=data.get("directory"), window=data.get("window"))


@dataclass(frozen=True)
class AgentConfig:
    algorithm: str
    params: dict = field(default_factory=dict)
    episodes: int | None = None

    def __post_init__(self):
        if self.algorithm not in AGENTS:
            raise ConfigurationError(f"unknown algorithm {self.algorithm!r}; choose from {sorted(AGENTS)}")
        if "seed" in self.params or "episodes" in self.params:
            raise ConfigurationError("set 'seed' and 'episodes' outside the agent params")
        gamma = self.params.get("gamma")
        if gamma is not None and not 0.0 < float(gamma) <= 1.0:
            raise ConfigurationError("gamma must lie in (0, 1]")
        start, end = self.params.get("epsilon_start", 0.8), self.params.get("epsilon_end", 0.001)
        if end > start:
            raise ConfigurationError("epsilon schedule must be non-increasing")

    def to_dict(self) -> dict:
        out = {"algorithm": self.algorithm}
        if self.episodes is not None:
            out["episodes"] = self.episodes
        if self.params:
            out["params"] = {k: list(v) if isinstance(v, tuple) else v for k, v in self.params.items()}
        return out

    @classmethod
    def from_dict(cls, data) -> "AgentConfig":
        if isinstance(data, str):
            return cls(data)
        unknown = set(data) - {"algorithm", "params", "episodes"}
        if unknown:
            raise ConfigurationError(f"unknown agent keys: {sorted(unknown)}")
        params = dict(data.get("params") or {})
        if "hidden_layers" in params:
            params["hidden_layers"] = tuple(params["hidden_layers"])
        return cls(data["algorithm"], params, data.get("episodes"))


@dataclass(frozen=True)
class ExperimentConfig:
    agents: tuple[AgentConfig, ...]
    scenario: ScenarioSource = ScenarioSource()
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    episodes: int = 250
    om_variants: tuple[OmVariant, ...] = (OmVariant.DYNAMIC,)
    output_dir: str = "runs"
    n_jobs: int = 1
    sample_efficiency: bool = True

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "om_variants", tuple(OmVariant.parse(v) for v in self.om_variants))
        if not self.agents:
            raise ConfigurationError("at least one agent is required")
        if not self.seeds:
            raise ConfigurationError("at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigurationError("seeds must be distinct")
        if not self.om_variants:
            raise ConfigurationError("at least one O&M variant is required")
        for agent in self.agents:
            n = self.episodes_for(agent)
            if n < 1:
                raise ConfigurationError("episodes must be positive")
            if self.sample_efficiency and n < SAMPLE_EFFICIENCY_EPISODES and agent.algorithm != "rule":
                raise ConfigurationError(
                    f"{agent.algorithm}: sample efficiency needs at least {SAMPLE_EFFICIENCY_EPISODES} episodes")
        if int(self.n_jobs) == 0:
            raise ConfigurationError("n_jobs must be non-zero")

    def episodes_for(self, agent: AgentConfig) -> int:
        return int(agent.episodes if agent.episodes is not None else self.episodes)

    def with_overrides(self, seed=None, episodes=None, output_dir=None, om_variant=None) -> "ExperimentConfig":
        """Apply command-line overrides; ``episodes`` also replaces per-agent values."""
        changes = {}
        if seed is not None:
            changes["seeds"] = (int(seed),)
        if episodes is not None:
            changes["episodes"] = int(episodes)
            changes["agents"] = tuple(replace(a, episodes=None) for a in self.agents)
        if output_dir is not None:
            changes["output_dir"] = str(output_dir)
        if om_variant is not None:
            changes["om_variants"] = (OmVariant.parse(om_variant),)
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.to_dict(),
            "seeds": list(self.seeds),
            "episodes": self.episodes,
            "om_variants": [v.value for v in self.om_variants],
            "output_dir": str(self.output_dir),
            "n_jobs": int(self.n_jobs),
            "sample_efficiency": self.sample_efficiency,
            "agents": [a.to_dict() for a in self.agents],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigurationError("config must be a mapping")
        known = {"scenario", "seeds", "episodes", "om_variants", "output_dir", "n_jobs", "sample_efficiency",
                 "agents"}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        kw = {k: data[k] for k in ("seeds", "episodes", "om_variants", "output_dir", "n_jobs", "sample_efficiency")
              if k in data}
        agents = tuple(AgentConfig.from_dict(a) for a in data.get("agents") or ())
        return cls(agents=agents, scenario=ScenarioSource.from_dict(data.get("scenario")), **kw)


def load_config(path) -> ExperimentConfig:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: invalid YAML ({exc})") from None
    return ExperimentConfig.from_dict(data)


def dump_config(config: ExperimentConfig, path) -> Path:
    path = Path(path)
    path.write_text(yaml.safe_dump(config.to_dict(), sort_keys=False))
    return path
