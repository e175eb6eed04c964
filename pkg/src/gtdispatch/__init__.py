"""Gas-turbine dispatch with dynamic O&M costs: environment, oracles and agents."""
from .costs import CostBreakdown, GtMode, GtState, OmParameters, OmVariant, om_step
from .env import ActionSpec, DispatchEnv, ObservationScaler, rollout, schedule_cost
from .oracle import OracleResult, dp_optimal, exhaustive_optimal, replay_cost
from .scenario import ScenarioTable, generate_scenario, load_scenario_dir, write_scenario_csv
from .surrogate import AmbientConditions, SurrogateParams, fuel_rate, max_power

__version__ = "0.1.0"

__all__ = ["ActionSpec", "AmbientConditions", "CostBreakdown", "DispatchEnv", "GtMode", "GtState",
           "ObservationScaler", "OmParameters", "OmVariant", "OracleResult", "ScenarioTable", "SurrogateParams",
           "dp_optimal", "exhaustive_optimal", "fuel_rate", "generate_scenario", "load_scenario_dir", "max_power",
           "om_step", "replay_cost", "rollout", "schedule_cost", "write_scenario_csv"]
