"""Deterministic co-simulator of urban road traffic and V2I signal control."""

from .config import ScenarioConfig, load_config, save_config
from .simulation import RunResult, Simulation, run_scenario

__all__ = ["ScenarioConfig", "load_config", "save_config",
           "RunResult", "Simulation", "run_scenario"]
__version__ = "0.1.0"
