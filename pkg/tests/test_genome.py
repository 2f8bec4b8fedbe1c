"""Tests for genomes, innovation numbers and the variation operators."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.logic.genome import (
    BASE_INNOVATIONS, FIRST_HIDDEN_ID, INPUT_IDS, OUTPUT_IDS,
    ConnectionGene, Genome, InnovationRegistry, NodeGene, NodeKind,
    add_connection, add_node, base_innovation, compatibility_distance, crossover,
    delete_connection, mutate, seed_population,
)
from src.models import EvolutionConfig


def genome_with(key: int, genes, fitness=None) -> Genome:
    """Minimal genome plus the given (source, target, weight[, enabled]) genes."""
    registry = InnovationRegistry()
    genome = Genome.minimal(key)
    for gene in genes:
        source, target, weight = gene[:3]
        enabled = gene[3] if len(gene) > 3 else True
        innovation = registry.connection_innovation(source, target)
        genome.connections[innovation] = ConnectionGene(innovation, source, target, weight, enabled)
    genome.fitness = fitness
    return genome


def raw_genome(weights: dict) -> Genome:
    """Genome whose genes carry arbitrary innovation numbers, for distance checks."""
    genome = Genome.minimal()
    for innovation, weight in weights.items():
        genome.connections[innovation] = ConnectionGene(innovation, 0, 40, weight)
    return genome


# =============================================================================
# TestGenomeStructure
# =============================================================================


class TestGenomeStructure:
    """Tests for Genome and node numbering."""

    def test_minimal_genome(self) -> None:
        """A minimal genome has 40 inputs, 3 outputs and nothing else."""
        genome = Genome.minimal()

        assert genome.input_ids == list(range(40))
        assert genome.output_ids == [40, 41, 42]
        assert genome.hidden_ids == []
        assert genome.connections == {}
        assert genome.problems() == []

    def test_base_innovations_are_fixed(self) -> None:
        """Input->output genes own innovations 1..120 in source-major order."""
        assert base_innovation(0, 40) == 1
        assert base_innovation(0, 42) == 3
        assert base_innovation(1, 40) == 4
        assert base_innovation(39, 42) == BASE_INNOVATIONS == 120
        assert base_innovation(43, 40) is None
        assert base_innovation(40, 41) is None

    def test_problems_flag_duplicate_enabled_pairs(self) -> None:
        """Two enabled genes over the same pair break the genome."""
        genome = genome_with(0, [(0, 40, 1.0)])
        genome.connections[500] = ConnectionGene(500, 0, 40, 2.0)

        assert any("duplicate" in p for p in genome.problems())

    def test_problems_flag_edges_into_inputs(self) -> None:
        """Connections may not target an input node."""
        genome = Genome.minimal()
        genome.connections[200] = ConnectionGene(200, 40, 3, 1.0)

        assert any("input node" in p for p in genome.problems())

    def test_problems_flag_weights_outside_range(self) -> None:
        """Weights beyond the configured range are reported."""
        genome = genome_with(0, [(0, 40, 6.0)])
        assert genome.problems(weight_range=5.0)
        assert genome.problems() == []

    def test_dict_round_trip_keeps_structure(self) -> None:
        """to_dict()/from_dict() preserve nodes, genes and fitness."""
        genome = genome_with(3, [(0, 40, 0.5), (5, 41, -1.25, False)], fitness=12.5)
        restored = Genome.from_dict(genome.to_dict())

        assert restored.same_structure(genome)
        assert restored.fitness == 12.5
        assert restored.key == 3


# =============================================================================
# TestInnovationRegistry
# =============================================================================


class TestInnovationRegistry:
    """Tests for InnovationRegistry."""

    def test_same_mutation_same_generation_shares_number(self) -> None:
        """A repeated structural mutation within a generation reuses its innovation."""
        registry = InnovationRegistry()
        first = registry.connection_innovation(43, 41)
        second = registry.connection_innovation(43, 41)

        assert first == second == BASE_INNOVATIONS + 1

    def test_new_generation_gets_new_number(self) -> None:
        """After start_generation() the same mutation gets a fresh innovation."""
        registry = InnovationRegistry()
        first = registry.connection_innovation(43, 41)
        registry.start_generation()

        assert registry.connection_innovation(43, 41) > first

    def test_base_pairs_ignore_the_counter(self) -> None:
        """Input->output genes never consume counter values."""
        registry = InnovationRegistry()
        registry.connection_innovation(7, 42)

        assert registry.next_innovation == BASE_INNOVATIONS + 1

    def test_split_is_shared_within_generation(self) -> None:
        """Splitting the same gene twice in one generation gives the same node."""
        registry = InnovationRegistry()
        gene = ConnectionGene(1, 0, 40, 1.0)

        assert registry.split(gene) == registry.split(gene)
        assert registry.split(gene)[0] == FIRST_HIDDEN_ID

    def test_split_avoids_nodes_the_genome_has(self) -> None:
        """A genome that already owns the cached node gets a new one."""
        registry = InnovationRegistry()
        gene = ConnectionGene(1, 0, 40, 1.0)
        node, _, _ = registry.split(gene)

        assert registry.split(gene, taken_nodes={node})[0] != node

    def test_round_trip_preserves_cache(self) -> None:
        """A restored registry continues exactly where the original stopped."""
        registry = InnovationRegistry()
        registry.connection_innovation(43, 41)
        registry.split(ConnectionGene(2, 0, 41, 1.0))
        restored = InnovationRegistry.from_dict(registry.to_dict())

        assert restored.connection_innovation(43, 41) == registry.connection_innovation(43, 41)
        assert restored.connection_innovation(44, 40) == registry.connection_innovation(44, 40)
        assert restored.to_dict() == registry.to_dict()

    def test_for_population_clears_used_numbers(self) -> None:
        """Counters restart above everything a loaded population uses."""
        genome = genome_with(9, [(0, 40, 1.0)])
        genome.nodes[60] = NodeGene(60, NodeKind.HIDDEN)
        genome.connections[300] = ConnectionGene(300, 0, 60, 1.0)
        registry = InnovationRegistry.for_population([genome])

        assert registry.next_innovation == 301
        assert registry.next_node_id == 61
        assert registry.next_genome_key == 10


# =============================================================================
# TestMutation
# =============================================================================


class TestMutation:
    """Tests for the mutation operators."""

    def test_seed_population_uses_base_genes_only(self) -> None:
        """The initial population only holds input->output genes."""
        config = EvolutionConfig(population_size=8, initial_connection_prob=0.5)
        population = seed_population(config, InnovationRegistry(), np.random.default_rng(1))

        assert [g.key for g in population] == list(range(8))
        for genome in population:
            assert genome.hidden_ids == []
            assert all(g.innovation <= BASE_INNOVATIONS for g in genome.genes)
            assert genome.problems(config.weight_range) == []

    def test_zero_connection_probability_gives_empty_genomes(self) -> None:
        """initial_connection_prob 0 seeds genomes without genes."""
        config = EvolutionConfig(population_size=3, initial_connection_prob=0.0)
        population = seed_population(config, InnovationRegistry(), np.random.default_rng(1))

        assert all(not g.connections for g in population)

    def test_full_connection_probability_gives_every_base_gene(self) -> None:
        """initial_connection_prob 1 seeds all 40 x 3 input->output genes."""
        config = EvolutionConfig(population_size=4, initial_connection_prob=1.0)
        population = seed_population(config, InnovationRegistry(), np.random.default_rng(1))

        assert all(len(g.connections) == BASE_INNOVATIONS == 120 for g in population)

    def test_connection_count_is_binomial(self) -> None:
        """With probability 0.2 the mean gene count of 50 genomes lies within 3 sigma of 24."""
        config = EvolutionConfig(population_size=50, initial_connection_prob=0.2)
        population = seed_population(config, InnovationRegistry(), np.random.default_rng(3))
        mean = np.mean([len(g.connections) for g in population])
        sigma = np.sqrt(120 * 0.2 * 0.8 / 50)

        assert abs(mean - 24.0) <= 3 * sigma

    def test_add_node_splits_a_connection(self) -> None:
        """add_node disables a->b and adds a->h (weight 1) and h->b (old weight)."""
        genome = genome_with(0, [(2, 41, -2.5)])
        registry = InnovationRegistry()
        assert add_node(genome, registry, EvolutionConfig(), np.random.default_rng(0))

        old = genome.connections[base_innovation(2, 41)]
        hidden = genome.hidden_ids[0]
        by_pair = {g.pair: g for g in genome.genes}
        assert old.enabled is False
        assert by_pair[(2, hidden)].weight == 1.0
        assert by_pair[(hidden, 41)].weight == -2.5
        assert genome.problems() == []

    def test_add_node_needs_an_enabled_gene(self) -> None:
        """With nothing to split the genome is unchanged."""
        genome = Genome.minimal()
        assert not add_node(genome, InnovationRegistry(), EvolutionConfig(), np.random.default_rng(0))

    def test_add_connection_never_targets_inputs(self) -> None:
        """New edges never end at an input node and never duplicate a pair."""
        rng = np.random.default_rng(3)
        registry = InnovationRegistry()
        genome = Genome.minimal()
        for _ in range(40):
            add_connection(genome, registry, EvolutionConfig(), rng)

        assert genome.problems() == []
        assert all(genome.nodes[g.target].kind is not NodeKind.INPUT for g in genome.genes)
        assert len(genome.pairs) == len(genome.connections)

    def test_delete_connection_removes_orphan_hidden_nodes(self) -> None:
        """A hidden node without remaining genes is removed with its last connection."""
        genome = genome_with(0, [(2, 41, 1.0)])
        add_node(genome, InnovationRegistry(), EvolutionConfig(), np.random.default_rng(0))
        while genome.connections:
            delete_connection(genome, np.random.default_rng(0))

        assert genome.hidden_ids == []

    def test_mutate_leaves_parent_untouched(self) -> None:
        """mutate() returns a changed copy and clears its fitness."""
        parent = genome_with(0, [(0, 40, 1.0), (1, 41, -1.0)], fitness=10.0)
        before = parent.to_dict()
        config = EvolutionConfig(weight_mutation_prob=1.0, add_node_prob=1.0, add_connection_prob=1.0)
        child = mutate(parent, InnovationRegistry(), config, np.random.default_rng(5))

        assert parent.to_dict() == before
        assert child.fitness is None
        assert not child.same_structure(parent)

    @given(seed=st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=40, deadline=None)
    def test_mutation_keeps_genomes_valid(self, seed: int) -> None:
        """Repeated mutation never breaks a genome's invariants."""
        rng = np.random.default_rng(seed)
        config = EvolutionConfig(weight_mutation_prob=1.0, add_node_prob=0.3,
                                 add_connection_prob=0.5, delete_connection_prob=0.2)
        registry = InnovationRegistry()
        genome = genome_with(0, [(0, 40, 1.0), (5, 42, -3.0)])
        for _ in range(15):
            genome = mutate(genome, registry, config, rng)

        assert genome.problems(config.weight_range) == []
        assert len(genome.input_ids) == len(INPUT_IDS)
        assert len(genome.output_ids) == len(OUTPUT_IDS)


# =============================================================================
# TestCrossover
# =============================================================================


class TestCrossover:
    """Tests for crossover()."""

    def test_disjoint_genes_come_from_fitter_parent(self) -> None:
        """Genes only the weaker parent has are left out."""
        strong = genome_with(0, [(0, 40, 1.0), (1, 41, 1.0)], fitness=10.0)
        weak = genome_with(1, [(0, 40, -1.0), (2, 42, 1.0)], fitness=5.0)
        child = crossover(strong, weak, np.random.default_rng(0))

        pairs = set(child.pairs)
        assert (1, 41) in pairs
        assert (2, 42) not in pairs
        assert (0, 40) in pairs

    def test_equal_fitness_inherits_from_both(self) -> None:
        """With a fitness tie every disjoint gene is kept."""
        a = genome_with(0, [(0, 40, 1.0)], fitness=3.0)
        b = genome_with(1, [(2, 42, 1.0)], fitness=3.0)
        child = crossover(a, b, np.random.default_rng(0))

        assert set(child.pairs) == {(0, 40), (2, 42)}

    def test_matching_weights_come_from_a_parent(self) -> None:
        """A matching gene's weight is one of the two parents' weights."""
        a = genome_with(0, [(0, 40, 1.5)], fitness=1.0)
        b = genome_with(1, [(0, 40, -4.0)], fitness=1.0)
        for seed in range(10):
            child = crossover(a, b, np.random.default_rng(seed))
            assert child.connections[1].weight in (1.5, -4.0)

    def test_reenable_probability_zero_keeps_disabled(self) -> None:
        """A gene disabled in a parent stays disabled when re-enabling never fires."""
        a = genome_with(0, [(0, 40, 1.0, False)], fitness=2.0)
        b = genome_with(1, [(0, 40, 1.0)], fitness=1.0)
        child = crossover(a, b, np.random.default_rng(0), reenable_prob=0.0)

        assert child.connections[1].enabled is False

    def test_reenable_probability_one_enables(self) -> None:
        """With reenable_prob 1 every inherited disabled gene comes back."""
        a = genome_with(0, [(0, 40, 1.0, False)], fitness=2.0)
        child = crossover(a, Genome.minimal(1), np.random.default_rng(0), reenable_prob=1.0)

        assert child.connections[1].enabled is True

    def test_child_includes_hidden_nodes_it_references(self) -> None:
        """Hidden nodes used by inherited genes are copied into the child."""
        a = genome_with(0, [(2, 41, 1.0)], fitness=2.0)
        add_node(a, InnovationRegistry(), EvolutionConfig(), np.random.default_rng(0))
        child = crossover(a, Genome.minimal(1), np.random.default_rng(0), key=77)

        assert child.key == 77
        assert child.hidden_ids == a.hidden_ids
        assert child.problems() == []


# =============================================================================
# TestCompatibility
# =============================================================================


class TestCompatibility:
    """Tests for compatibility_distance()."""

    def test_worked_example(self) -> None:
        """Two excess, one disjoint and a mean weight difference of 0.25 give 3.1."""
        a = raw_genome({1: 0.5, 2: -1.0, 3: 0.2})
        b = raw_genome({1: 0.0, 2: -1.0, 4: 1.0, 5: 1.0})

        assert compatibility_distance(a, b) == pytest.approx(3.1)

    def test_identical_genomes_are_zero_apart(self) -> None:
        """A genome has distance 0 to itself."""
        a = raw_genome({1: 0.5, 7: 2.0})
        assert compatibility_distance(a, a.copy()) == 0.0

    def test_empty_genomes(self) -> None:
        """Two genomes without genes have distance 0."""
        assert compatibility_distance(Genome.minimal(), Genome.minimal(1)) == 0.0

    def test_large_genomes_are_normalized(self) -> None:
        """From 20 genes on, gene differences are divided by the larger genome size."""
        a = raw_genome({i: 0.0 for i in range(1, 21)})
        b = raw_genome({i: 0.0 for i in range(1, 11)})

        assert compatibility_distance(a, b) == pytest.approx(10 / 20)

    def test_symmetric(self) -> None:
        """Distance does not depend on argument order."""
        a = raw_genome({1: 0.5, 3: 0.2, 9: 1.0})
        b = raw_genome({1: -0.5, 4: 1.0})

        assert compatibility_distance(a, b) == pytest.approx(compatibility_distance(b, a))
