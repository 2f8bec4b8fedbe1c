"""Shared fixtures for the MicroNEAT test suites."""

import sys
from pathlib import Path
from typing import Iterable, Optional, Tuple

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.logic.scenarios import TrainingSet  # noqa: E402
from src.models import (  # noqa: E402
    EvolutionConfig, Formation, MapBounds, Scenario, Team, UnitState, UnitType, WorldState,
)

# =============================================================================
# Markers
# =============================================================================


def pytest_addoption(parser):
    parser.addoption("--run-slow", action="store_true", default=False, help="run long acceptance tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long acceptance runs, enabled with --run-slow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


# =============================================================================
# Helpers
# =============================================================================


def make_world(ranged: Iterable[Tuple[float, float]] = (), melee: Iterable[Tuple[float, float]] = (),
               size: float = 64.0, ranged_type: UnitType = UnitType.VULTURE,
               melee_stats=None, hp: Optional[dict] = None) -> WorldState:
    """World with ranged units first (ids 0..n-1) and melee units after."""
    units = {}
    for team, stats, positions in (
        (Team.RANGED, ranged_type.stats, ranged),
        (Team.MELEE, melee_stats or UnitType.ZEALOT.stats, melee),
    ):
        for x, y in positions:
            uid = len(units)
            units[uid] = UnitState(id=uid, team=team, x=float(x), y=float(y), stats=stats,
                                   hp=(hp or {}).get(uid, -1.0))
    return WorldState(units=units, bounds=MapBounds.square(size))


def still(sensors):
    """Controller that neither moves nor attacks."""
    return (0.5, 0.5, 0.0)


# =============================================================================
# Fixtures
# =============================================================================


@pytest.fixture
def small_scenario() -> Scenario:
    """Short diagonal skirmish on a small map: contact happens within the budget."""
    return Scenario(formation=Formation.DIAGONAL, melee_count=3, map_size=24.0, frame_budget=200)


@pytest.fixture
def tiny_training_set(small_scenario) -> TrainingSet:
    return TrainingSet.from_pairs(
        [(Formation.DIAGONAL, 3), (Formation.SURROUNDED, 4)], small_scenario)


@pytest.fixture
def small_evolution() -> EvolutionConfig:
    return EvolutionConfig(population_size=10, generations=3, initial_connection_prob=0.3,
                           add_node_prob=0.2, add_connection_prob=0.3, seed=7)
