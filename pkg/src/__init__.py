"""
MicroNEAT
Deterministic RTS micro-combat simulator with a NEAT engine for evolving kiting controllers
"""
from .models import (
    Team, Formation, UnitStats, UnitType, UnitState, MapBounds, ActionCommand,
    WorldState, Scenario, ReplayRecord, FitnessInputs, EpisodeResult,
    EvolutionConfig, SimulationSettings, RunSettings, RunManifest, now_str,
)
from .errors import (
    MicroNeatError, SimInputError, SpawnError, ConfigError, GenomeSchemaError,
    OrchestrationError, exit_code_for,
)
from .config import RunConfig, load_config, default_config

__version__ = "1.0.0"

__all__ = [
    'Team', 'Formation', 'UnitStats', 'UnitType', 'UnitState', 'MapBounds', 'ActionCommand',
    'WorldState', 'Scenario', 'ReplayRecord', 'FitnessInputs', 'EpisodeResult',
    'EvolutionConfig', 'SimulationSettings', 'RunSettings', 'RunManifest', 'now_str',
    'MicroNeatError', 'SimInputError', 'SpawnError', 'ConfigError', 'GenomeSchemaError',
    'OrchestrationError', 'exit_code_for',
    'RunConfig', 'load_config', 'default_config',
]
