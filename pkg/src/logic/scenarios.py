"""
Scenario generation for MicroNEAT
Spawn formations, the training scenario sets and per-generation reseeding
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import Iterable, Iterator, List, Sequence, Tuple

import numpy as np

from ..errors import ConfigError, SpawnError
from ..models import (
    Formation, Scenario, Team, UnitState, WorldState,
    CORNER_OFFSET, GROUP_SPACING, RING_RADIUS,
)

logger = logging.getLogger(__name__)


# (formation, zealots) pairs of the ten-scenario simulation training set
STANDARD_TRAINING_SET = (
    (Formation.DIAGONAL, 25),
    (Formation.REVERSED_DIAGONAL, 20),
    (Formation.SIDE_BY_SIDE, 10),
    (Formation.REVERSED_SIDE_BY_SIDE, 15),
    (Formation.SURROUND, 20),
    (Formation.SURROUND, 10),
    (Formation.SURROUNDED, 20),
    (Formation.SURROUNDED, 25),
    (Formation.RANDOM, 15),
    (Formation.RANDOM, 25),
)

# The three-scenario set used with the second hyper-parameter preset
SC2_TRAINING_SET = (
    (Formation.DIAGONAL, 25),
    (Formation.RANDOM, 20),
    (Formation.SIDE_BY_SIDE, 15),
)

SWEEP_FORMATIONS = (
    Formation.DIAGONAL,
    Formation.REVERSED_DIAGONAL,
    Formation.SIDE_BY_SIDE,
    Formation.SURROUND,
    Formation.SURROUNDED,
    Formation.RANDOM,
)


def derive_seed(seed: int, *keys: int) -> int:
    """Stable 32-bit seed for (run seed, generation, scenario index, ...)"""
    sequence = np.random.SeedSequence([int(seed)] + [int(k) for k in keys])
    return int(sequence.generate_state(1)[0])


def parse_scenario_spec(spec: str, base: Scenario = Scenario()) -> Scenario:
    """'formation:count' (e.g. 'diagonal:25') -> Scenario derived from base"""
    name, _, count = spec.partition(':')
    try:
        formation = Formation(name.strip().lower())
    except ValueError:
        valid = ", ".join(f.value for f in Formation)
        raise ConfigError(f"unknown formation '{name}' (expected one of: {valid})") from None
    if not count:
        return replace(base, formation=formation)
    try:
        melee_count = int(count)
    except ValueError:
        raise ConfigError(f"zealot count must be an integer in '{spec}'") from None
    if melee_count <= 0:
        raise ConfigError(f"zealot count must be positive in '{spec}'")
    return replace(base, formation=formation, melee_count=melee_count)


# === TRAINING SET ===

@dataclass(frozen=True)
class TrainingSet:
    """Ordered, non-empty list of scenarios evaluated together"""
    scenarios: Tuple[Scenario, ...]

    def __post_init__(self):
        if not self.scenarios:
            raise ConfigError("training set must contain at least one scenario")
        object.__setattr__(self, 'scenarios', tuple(self.scenarios))

    def __len__(self):
        return len(self.scenarios)

    def __iter__(self) -> Iterator[Scenario]:
        return iter(self.scenarios)

    def __getitem__(self, index: int) -> Scenario:
        return self.scenarios[index]

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[Formation, int]], base: Scenario = Scenario()) -> 'TrainingSet':
        return cls(tuple(replace(base, formation=f, melee_count=n) for f, n in pairs))

    @classmethod
    def standard(cls, base: Scenario = Scenario()) -> 'TrainingSet':
        return cls.from_pairs(STANDARD_TRAINING_SET, base)

    @property
    def max_fitness(self) -> float:
        return sum(s.max_fitness for s in self.scenarios)

    @property
    def labels(self) -> List[str]:
        return [s.label for s in self.scenarios]

    def for_generation(self, seed: int, generation: int) -> 'TrainingSet':
        """Same scenarios with spawn seeds fixed for every genome of one generation"""
        return TrainingSet(tuple(
            s.with_seed(derive_seed(seed, generation, index))
            for index, s in enumerate(self.scenarios)
        ))

    def subset(self, positions: Sequence[int]) -> 'TrainingSet':
        """Scenarios at the given 1-based positions"""
        chosen = []
        for position in positions:
            if not 1 <= position <= len(self.scenarios):
                raise ConfigError(
                    f"scenario {position} out of range (training set has {len(self.scenarios)})")
            chosen.append(self.scenarios[position - 1])
        return TrainingSet(tuple(chosen))

    def with_changes(self, **changes) -> 'TrainingSet':
        return TrainingSet(tuple(replace(s, **changes) for s in self.scenarios))

    def to_list(self) -> List[dict]:
        return [s.to_dict() for s in self.scenarios]

    @classmethod
    def from_list(cls, data: List[dict]) -> 'TrainingSet':
        return cls(tuple(Scenario.from_dict(item) for item in data))


# === SPAWNING ===

def grid_offsets(count: int, spacing: float = GROUP_SPACING) -> np.ndarray:
    """Offsets of a near-square grid of `count` points centred on the origin"""
    if count <= 0:
        return np.zeros((0, 2))
    columns = math.ceil(math.sqrt(count))
    rows = math.ceil(count / columns)
    index = np.arange(count)
    col = index % columns - (columns - 1) / 2.0
    row = index // columns - (rows - 1) / 2.0
    return np.column_stack([col, row]) * spacing


def ring_positions(count: int, center: np.ndarray, radius: float = RING_RADIUS) -> np.ndarray:
    """Points at angles 2*pi*k/count on a circle, starting due east"""
    angles = 2.0 * math.pi * np.arange(count) / max(count, 1)
    return np.asarray(center) + radius * np.column_stack([np.cos(angles), np.sin(angles)])


def _layout(scenario: Scenario) -> Tuple[np.ndarray, np.ndarray]:
    size = scenario.map_size
    margin = min(CORNER_OFFSET, size / 8.0)
    low = np.array([margin, margin])
    high = np.array([size - margin, size - margin])
    center = np.array([size / 2.0, size / 2.0])
    n_ranged, n_melee = scenario.ranged_count, scenario.melee_count
    formation = scenario.formation

    if formation in (Formation.DIAGONAL, Formation.REVERSED_DIAGONAL):
        ranged = low + grid_offsets(n_ranged)
        melee = high + grid_offsets(n_melee)
        if formation is Formation.REVERSED_DIAGONAL:
            ranged, melee = high + grid_offsets(n_ranged), low + grid_offsets(n_melee)
        return ranged, melee

    if formation in (Formation.SIDE_BY_SIDE, Formation.REVERSED_SIDE_BY_SIDE):
        west = np.array([margin, size / 2.0])
        east = np.array([size - margin, size / 2.0])
        if formation is Formation.REVERSED_SIDE_BY_SIDE:
            west, east = east, west
        return west + grid_offsets(n_ranged), east + grid_offsets(n_melee)

    if formation is Formation.SURROUND:
        melee = center + grid_offsets(n_melee)
        return ring_positions(n_ranged, melee.mean(axis=0)), melee

    if formation is Formation.SURROUNDED:
        ranged = center + grid_offsets(n_ranged)
        return ranged, ring_positions(n_melee, ranged.mean(axis=0))

    rng = np.random.default_rng(scenario.spawn_seed)
    ranged = rng.uniform(0.0, size, size=(n_ranged, 2))
    melee = rng.uniform(0.0, size, size=(n_melee, 2))
    return ranged, melee


def spawn(scenario: Scenario) -> WorldState:
    """
    Initial world of a scenario.

    Ranged units get ids 0..n-1 and melee units n..n+m-1. Raises SpawnError when
    the scenario is invalid or a formation does not fit inside the map.
    """
    problems = scenario.problems()
    if problems:
        raise SpawnError("; ".join(f"{name}: {msg}" for name, msg in problems))

    ranged_xy, melee_xy = _layout(scenario)
    bounds = scenario.bounds
    units = {}
    for team, stats, positions in (
        (Team.RANGED, scenario.ranged_stats, ranged_xy),
        (Team.MELEE, scenario.melee_stats, melee_xy),
    ):
        for x, y in positions:
            x, y = float(x), float(y)
            if not bounds.contains(x, y):
                raise SpawnError(
                    f"{scenario.formation.value}: {team.value} unit at ({x:.2f}, {y:.2f}) "
                    f"falls outside the {scenario.map_size:g}x{scenario.map_size:g} map")
            uid = len(units)
            units[uid] = UnitState(id=uid, team=team, x=x, y=y, stats=stats)

    logger.debug("spawned %s: %d ranged, %d melee", scenario.label, len(ranged_xy), len(melee_xy))
    return WorldState(units=units, bounds=bounds, frame=0, dt=scenario.dt)
