"""Tests for spawn formations and training sets."""

import math

import numpy as np
import pytest

from src.errors import ConfigError, SpawnError
from src.logic.scenarios import (
    STANDARD_TRAINING_SET, SWEEP_FORMATIONS, TrainingSet,
    derive_seed, grid_offsets, parse_scenario_spec, ring_positions, spawn,
)
from src.models import Formation, RING_RADIUS, Scenario, Team, UnitType


def positions(world, team):
    return np.array([u.position for u in world.living(team)])


class TestSpawn:
    """Tests for spawn()."""

    @pytest.mark.parametrize("formation", list(Formation))
    def test_every_formation_fits_the_default_map(self, formation: Formation) -> None:
        """All formations spawn inside the map with full hitpoints."""
        world = spawn(Scenario(formation=formation, melee_count=30, spawn_seed=11))

        assert world.count(Team.RANGED) == 5
        assert world.count(Team.MELEE) == 30
        assert all(world.bounds.contains(*u.position) for u in world.units.values())
        assert all(u.hp == u.stats.hitpoints_max for u in world.units.values())
        assert all(u.cooldown_remaining == 0.0 for u in world.units.values())

    def test_ids_ranged_first(self) -> None:
        """Ranged units get ids 0..n-1 and melee units follow."""
        world = spawn(Scenario(melee_count=3))

        assert [u.id for u in world.living(Team.RANGED)] == [0, 1, 2, 3, 4]
        assert [u.id for u in world.living(Team.MELEE)] == [5, 6, 7]
        assert world.initial_counts == {Team.RANGED: 5, Team.MELEE: 3}

    def test_surrounded_puts_zealots_on_compass_points(self) -> None:
        """Four zealots sit east, north, west and south of the vultures at ring radius."""
        world = spawn(Scenario(formation=Formation.SURROUNDED, melee_count=4))
        centre = positions(world, Team.RANGED).mean(axis=0)
        offsets = positions(world, Team.MELEE) - centre

        assert offsets == pytest.approx(np.array([[10, 0], [0, 10], [-10, 0], [0, -10]]), abs=1e-9)

    def test_surround_rings_the_vultures_around_the_zealots(self) -> None:
        """In a surround the ranged units form the ring."""
        world = spawn(Scenario(formation=Formation.SURROUND, melee_count=9))
        centre = positions(world, Team.MELEE).mean(axis=0)
        radii = np.hypot(*(positions(world, Team.RANGED) - centre).T)

        assert radii == pytest.approx(np.full(5, RING_RADIUS))

    def test_diagonal_and_reversed(self) -> None:
        """Diagonal puts the vultures in the low corner, reversed in the high one."""
        normal = spawn(Scenario(formation=Formation.DIAGONAL, melee_count=5))
        reverse = spawn(Scenario(formation=Formation.REVERSED_DIAGONAL, melee_count=5))

        assert positions(normal, Team.RANGED).mean() < positions(normal, Team.MELEE).mean()
        assert positions(reverse, Team.RANGED).mean() > positions(reverse, Team.MELEE).mean()

    def test_side_by_side_shares_a_row(self) -> None:
        """Side by side groups face each other across the map at mid height."""
        world = spawn(Scenario(formation=Formation.SIDE_BY_SIDE, melee_count=5))
        ranged, melee = positions(world, Team.RANGED), positions(world, Team.MELEE)

        assert ranged[:, 0].mean() < melee[:, 0].mean()
        assert ranged[:, 1].mean() == pytest.approx(melee[:, 1].mean(), abs=1.0)

    def test_random_depends_only_on_seed(self) -> None:
        """Random layouts repeat for a seed and change with it."""
        a = spawn(Scenario(formation=Formation.RANDOM, melee_count=10, spawn_seed=3))
        b = spawn(Scenario(formation=Formation.RANDOM, melee_count=10, spawn_seed=3))
        c = spawn(Scenario(formation=Formation.RANDOM, melee_count=10, spawn_seed=4))

        assert a.snapshot() == b.snapshot()
        assert a.snapshot() != c.snapshot()

    def test_crowd_that_does_not_fit_is_rejected(self) -> None:
        """200 zealots cannot be packed on a 10x10 map."""
        with pytest.raises(SpawnError):
            spawn(Scenario(melee_count=200, map_size=10.0))

    @pytest.mark.parametrize("changes", [
        {'melee_count': 0},
        {'ranged_count': 0},
        {'map_size': 0.0},
        {'frame_budget': -1},
        {'dt': 0.0},
        {'map_size': 3.0},  # vulture range exceeds the diagonal
    ])
    def test_invalid_scenarios_rejected(self, changes) -> None:
        """Non-positive counts, sizes and steps raise SpawnError."""
        with pytest.raises(SpawnError):
            spawn(Scenario(**changes))

    def test_hellions_use_their_own_stats(self) -> None:
        """The ranged unit type is configurable."""
        world = spawn(Scenario(ranged_type=UnitType.HELLION, melee_count=2))
        assert world.units[0].hp == 90


class TestLayoutHelpers:
    """Tests for grid_offsets() and ring_positions()."""

    @pytest.mark.parametrize("count", [1, 2, 5, 9, 25, 30])
    def test_grid_is_centred(self, count: int) -> None:
        """Grids are centred on the origin and spaced at least one unit apart."""
        offsets = grid_offsets(count)

        assert len(offsets) == count
        assert np.abs(offsets.mean(axis=0)).max() < 1.0
        gaps = [math.dist(p, q) for i, p in enumerate(offsets) for q in offsets[i + 1:]]
        assert min(gaps, default=1.0) >= 1.0 - 1e-12

    def test_ring_starts_due_east(self) -> None:
        """The first ring position is at angle 0."""
        ring = ring_positions(3, np.array([5.0, 5.0]), radius=2.0)
        assert ring[0] == pytest.approx([7.0, 5.0])


class TestTrainingSet:
    """Tests for TrainingSet."""

    def test_standard_set(self) -> None:
        """The standard set holds ten scenarios worth 22500 fitness in total."""
        training_set = TrainingSet.standard()

        assert len(training_set) == len(STANDARD_TRAINING_SET) == 10
        assert training_set.max_fitness == 22500
        assert training_set.labels[0] == "diagonal, 25 zealots"

    def test_seeds_fixed_within_a_generation(self) -> None:
        """The same generation gets the same seeds, another generation different ones."""
        training_set = TrainingSet.standard()
        first = [s.spawn_seed for s in training_set.for_generation(0, 4)]
        again = [s.spawn_seed for s in training_set.for_generation(0, 4)]
        other = [s.spawn_seed for s in training_set.for_generation(0, 5)]

        assert first == again
        assert first != other

    def test_subset_is_one_based(self) -> None:
        """subset() picks scenarios by 1-based position."""
        chosen = TrainingSet.standard().subset([1, 3])
        assert [s.formation for s in chosen] == [Formation.DIAGONAL, Formation.SIDE_BY_SIDE]

    @pytest.mark.parametrize("positions", [[0], [11]])
    def test_subset_out_of_range(self, positions) -> None:
        """Positions outside the set are config errors."""
        with pytest.raises(ConfigError):
            TrainingSet.standard().subset(positions)

    def test_empty_set_rejected(self) -> None:
        """A training set needs at least one scenario."""
        with pytest.raises(ConfigError):
            TrainingSet(())

    def test_list_round_trip(self) -> None:
        """to_list()/from_list() keep every scenario field."""
        training_set = TrainingSet.standard().for_generation(9, 2)
        assert TrainingSet.from_list(training_set.to_list()) == training_set

    def test_sweep_formations_skip_reversed_side_by_side(self) -> None:
        """Sweeps cover six formations."""
        assert len(SWEEP_FORMATIONS) == 6
        assert Formation.REVERSED_SIDE_BY_SIDE not in SWEEP_FORMATIONS


class TestScenarioSpec:
    """Tests for parse_scenario_spec() and derive_seed()."""

    def test_formation_and_count(self) -> None:
        """'surround:20' selects the formation and the zealot count."""
        scenario = parse_scenario_spec("surround:20")
        assert (scenario.formation, scenario.melee_count) == (Formation.SURROUND, 20)

    def test_count_is_optional(self) -> None:
        """Without a count the base scenario's count is kept."""
        scenario = parse_scenario_spec("random", Scenario(melee_count=7))
        assert (scenario.formation, scenario.melee_count) == (Formation.RANDOM, 7)

    @pytest.mark.parametrize("spec", ["spiral:5", "diagonal:x", "diagonal:0", "diagonal:-3"])
    def test_bad_specs(self, spec: str) -> None:
        """Unknown formations and non-positive counts are config errors."""
        with pytest.raises(ConfigError):
            parse_scenario_spec(spec)

    def test_derive_seed_is_stable(self) -> None:
        """Derived seeds repeat for the same keys and differ otherwise."""
        assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
        assert derive_seed(1, 2, 3) != derive_seed(1, 3, 2)
        assert 0 <= derive_seed(0) < 2 ** 32
