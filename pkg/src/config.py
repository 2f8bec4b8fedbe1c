"""
Configuration for MicroNEAT
Versioned JSON run configs with environment overrides and line-anchored diagnostics
"""
import json
import logging
import os
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

from .errors import ConfigError
from .logic.scenarios import TrainingSet
from .models import (
    EvolutionConfig, Formation, RunSettings, SimulationSettings, UnitType,
)
from .storage import canonical_hash

logger = logging.getLogger(__name__)

CONFIG_VERSION = 1
ENV_PREFIX = "MICRONEAT_"
SECTIONS = ('simulation', 'evolution', 'training_set', 'run')
SCENARIO_KEYS = ('formation', 'zealots')


@dataclass
class RunConfig:
    """Everything a run reads from its config file"""
    simulation: SimulationSettings = field(default_factory=SimulationSettings)
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    training_set: TrainingSet = field(default_factory=TrainingSet.standard)
    run: RunSettings = field(default_factory=RunSettings)
    source: str = ""

    @property
    def config_hash(self) -> str:
        """Hash of every setting that can change results (run settings excluded)"""
        data = self.to_dict()
        del data['run']
        return canonical_hash(data)

    def with_overrides(self, seed: Optional[int] = None, workers: Optional[int] = None,
                       generations: Optional[int] = None, ranged_type: Optional[str] = None,
                       scenarios: Optional[List[int]] = None) -> 'RunConfig':
        """Copy with command-line overrides applied on top of file and environment"""
        evolution = EvolutionConfig.from_dict(self.evolution.to_dict())
        if seed is not None:
            evolution.seed = int(seed)
        if generations is not None:
            evolution.generations = int(generations)
        run = replace(self.run, workers=int(workers)) if workers is not None else self.run
        simulation = self.simulation
        training_set = self.training_set
        if ranged_type is not None:
            try:
                unit_type = UnitType.from_key(ranged_type)
            except ValueError as e:
                raise ConfigError(str(e)) from None
            simulation = replace(simulation, ranged_type=unit_type.key)
            training_set = training_set.with_changes(ranged_type=unit_type)
        if scenarios:
            training_set = training_set.subset(scenarios)
        config = replace(self, simulation=simulation, evolution=evolution, run=run,
                         training_set=training_set)
        _check(config, text="", path=self.source or "<overrides>")
        return config

    def to_dict(self) -> dict:
        return {
            'version': CONFIG_VERSION,
            'simulation': self.simulation.to_dict(),
            'evolution': self.evolution.to_dict(),
            'training_set': [
                {'formation': s.formation.value, 'zealots': s.melee_count} for s in self.training_set
            ],
            'run': self.run.to_dict(),
        }


def default_config() -> RunConfig:
    return RunConfig()


# === LINE ANCHORS ===

def _line_of(text: str, *keys: str) -> Optional[int]:
    """Line of the last key in a chain of nested keys; None when it cannot be found"""
    position = 0
    for key in keys:
        match = re.compile(r'"%s"\s*:' % re.escape(key)).search(text, position)
        if match is None:
            return None
        position = match.start()
    return text.count("\n", 0, position) + 1 if text else None


def _nth_entry_line(text: str, index: int) -> Optional[int]:
    """Line of the index-th object inside the training_set array"""
    match = re.search(r'"training_set"\s*:\s*\[', text)
    if match is None:
        return None
    position = match.end()
    for _ in range(index + 1):
        position = text.find("{", position)
        if position < 0:
            return None
        position += 1
    return text.count("\n", 0, position - 1) + 1


# === COERCION ===

def _coerce(value: Any, default: Any, where: str) -> Any:
    """Value converted to the type of its default; bools are never numbers"""
    kind = type(default)
    if kind is bool:
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ('true', 'false', '1', '0'):
            return value.lower() in ('true', '1')
    elif kind is int:
        if isinstance(value, int) and not isinstance(value, bool):
            return value
        if isinstance(value, float) and value.is_integer():
            return int(value)
        if isinstance(value, str):
            try:
                return int(value)
            except ValueError:
                pass
    elif kind is float:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        if isinstance(value, str):
            try:
                return float(value)
            except ValueError:
                pass
    elif kind is str:
        if isinstance(value, str):
            return value
    raise ValueError(f"{where} must be {kind.__name__}, got {value!r}")


def _section(raw: Mapping, name: str, defaults: object, text: str, path: str) -> Dict[str, Any]:
    data = raw.get(name, {})
    if not isinstance(data, dict):
        raise ConfigError(f"section '{name}' must be an object", path, _line_of(text, name))
    allowed = {k: getattr(defaults, k) for k in defaults.__dataclass_fields__}
    values = {}
    for key, value in data.items():
        if key not in allowed:
            raise ConfigError(f"unknown key '{name}.{key}'", path, _line_of(text, name, key))
        try:
            values[key] = _coerce(value, allowed[key], f"{name}.{key}")
        except ValueError as e:
            raise ConfigError(str(e), path, _line_of(text, name, key)) from None
    return values


def _training_set(raw: Mapping, base_scenario, text: str, path: str) -> TrainingSet:
    entries = raw.get('training_set')
    if entries is None:
        return TrainingSet.standard(base_scenario)
    if not isinstance(entries, list) or not entries:
        raise ConfigError("training_set must be a non-empty list", path, _line_of(text, 'training_set'))
    pairs = []
    for index, entry in enumerate(entries):
        line = _nth_entry_line(text, index)
        if not isinstance(entry, dict):
            raise ConfigError(f"training_set[{index}] must be an object", path, line)
        unknown = sorted(set(entry) - set(SCENARIO_KEYS))
        if unknown:
            raise ConfigError(f"unknown key '{unknown[0]}' in training_set[{index}]", path, line)
        try:
            formation = Formation(entry.get('formation'))
        except ValueError:
            valid = ", ".join(f.value for f in Formation)
            raise ConfigError(f"training_set[{index}].formation must be one of: {valid}", path, line) from None
        zealots = entry.get('zealots')
        if isinstance(zealots, bool) or not isinstance(zealots, int) or zealots <= 0:
            raise ConfigError(f"training_set[{index}].zealots must be a positive integer", path, line)
        pairs.append((formation, zealots))
    return TrainingSet.from_pairs(pairs, base_scenario)


# === ENVIRONMENT ===

def apply_env_overrides(raw: Dict[str, Any], environ: Optional[Mapping[str, str]] = None) -> List[str]:
    """
    Apply MICRONEAT_<SECTION>__<KEY>=value variables to a raw config dict in place.
    Returns the dotted names that were overridden.
    """
    environ = os.environ if environ is None else environ
    defaults = {'simulation': SimulationSettings(), 'evolution': EvolutionConfig(), 'run': RunSettings()}
    applied = []
    for name in sorted(environ):
        if not name.startswith(ENV_PREFIX):
            continue
        section, _, key = name[len(ENV_PREFIX):].lower().partition('__')
        if section not in defaults or key not in defaults[section].__dataclass_fields__:
            raise ConfigError(f"environment variable {name} names no config key", path="environment")
        try:
            value = _coerce(environ[name], getattr(defaults[section], key), f"{section}.{key}")
        except ValueError as e:
            raise ConfigError(f"{name}: {e}", path="environment") from None
        section_data = raw.setdefault(section, {})
        if not isinstance(section_data, dict):
            raise ConfigError(f"section '{section}' must be an object", path="environment")
        section_data[key] = value
        applied.append(f"{section}.{key}")
    if applied:
        logger.info("environment overrides: %s", ", ".join(applied))
    return applied


# === LOADING ===

def _check(config: RunConfig, text: str, path: str):
    problems: List[Tuple[str, str, str]] = []
    problems += [('evolution', f, m) for f, m in config.evolution.problems()]
    problems += [('run', f, m) for f, m in config.run.problems()]
    if config.evolution.seed < 0:
        problems.append(('evolution', 'seed', "must be >= 0"))
    for unit_key in ('ranged_type', 'melee_type'):
        try:
            UnitType.from_key(getattr(config.simulation, unit_key))
        except ValueError as e:
            problems.append(('simulation', unit_key, str(e)))
    if not problems:
        problems += [('simulation', f, m) for f, m in config.simulation.base_scenario().problems()]
    if problems:
        section, key, message = problems[0]
        raise ConfigError(f"{section}.{key} {message}", path, _line_of(text, section, key))


def parse_config(text: str, path: str = "<config>",
                 environ: Optional[Mapping[str, str]] = None) -> RunConfig:
    try:
        raw = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e.msg}", path, e.lineno) from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object", path, 1)

    for key in raw:
        if key != 'version' and key not in SECTIONS:
            raise ConfigError(f"unknown section '{key}'", path, _line_of(text, key))
    version = raw.get('version', CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigError(f"unsupported config version {version!r} (expected {CONFIG_VERSION})",
                          path, _line_of(text, 'version'))

    apply_env_overrides(raw, environ)

    simulation = SimulationSettings(**_section(raw, 'simulation', SimulationSettings(), text, path))
    evolution = EvolutionConfig.from_dict(_section(raw, 'evolution', EvolutionConfig(), text, path))
    run = RunSettings(**_section(raw, 'run', RunSettings(), text, path))
    config = RunConfig(simulation=simulation, evolution=evolution, run=run, source=path)
    _check(config, text, path)
    config.training_set = _training_set(raw, simulation.base_scenario(), text, path)
    return config


def load_config(path: Optional[str] = None, environ: Optional[Mapping[str, str]] = None) -> RunConfig:
    """Config from a file (or the built-in preset when path is None) plus env overrides"""
    if path is None:
        return parse_config("{}", "<default>", environ)
    file_path = Path(path)
    with open(file_path, 'r', encoding='utf-8') as f:
        text = f.read()
    config = parse_config(text, str(file_path), environ)
    logger.debug("loaded config %s (%d scenarios)", file_path, len(config.training_set))
    return config

