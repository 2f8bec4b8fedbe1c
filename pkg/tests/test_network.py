"""Tests for network compilation and activation."""

import numpy as np
import pytest

from src.errors import SimInputError
from src.logic.genome import ConnectionGene, Genome, NodeGene, NodeKind, base_innovation
from src.logic.network import (
    GenomeController, Network, activate, evaluation_order, recurrent_edges, steep_sigmoid,
)
from src.logic.sensors import SensorVector

ZEROS = [0.0] * 40


def wire(genome: Genome, source: int, target: int, weight: float, innovation: int = None) -> None:
    innovation = innovation or base_innovation(source, target)
    genome.connections[innovation] = ConnectionGene(innovation, source, target, weight)


def with_hidden(*node_ids: int) -> Genome:
    genome = Genome.minimal()
    for node_id in node_ids:
        genome.nodes[node_id] = NodeGene(node_id, NodeKind.HIDDEN)
    return genome


class TestActivationFunction:
    """Tests for steep_sigmoid()."""

    def test_midpoint(self) -> None:
        """The sigmoid is 0.5 at zero."""
        assert steep_sigmoid(0.0) == 0.5

    def test_slope(self) -> None:
        """The curve uses slope 4.9."""
        assert steep_sigmoid(1.0) == pytest.approx(1.0 / (1.0 + np.exp(-4.9)))

    def test_extreme_inputs_do_not_overflow(self) -> None:
        """Very large inputs saturate without math errors."""
        assert 0.0 < steep_sigmoid(-1e9) < 1e-20
        assert 1.0 - 1e-12 < steep_sigmoid(1e9) <= 1.0


class TestGraphOrder:
    """Tests for recurrent_edges() and evaluation_order()."""

    def test_two_cycle_has_one_back_edge(self) -> None:
        """DFS from the lowest id marks the edge closing the cycle."""
        assert recurrent_edges([1, 2], [(1, 2), (2, 1)]) == {(2, 1)}

    def test_self_loop_is_recurrent(self) -> None:
        """A self-loop is always a back edge."""
        assert recurrent_edges([5], [(5, 5)]) == {(5, 5)}

    def test_acyclic_graph_has_no_back_edges(self) -> None:
        """Feed-forward graphs are left alone."""
        assert recurrent_edges([1, 2, 3], [(1, 2), (2, 3), (1, 3)]) == set()

    def test_ready_nodes_taken_lowest_id_first(self) -> None:
        """Ties in the topological order go to the lowest id."""
        assert evaluation_order([3, 1, 2], [(3, 2)]) == [1, 3, 2]

    def test_order_respects_edges(self) -> None:
        """Every source comes before its target."""
        edges = [(50, 44), (44, 43), (0, 50)]
        order = evaluation_order([0, 43, 44, 50], edges)
        for source, target in edges:
            assert order.index(source) < order.index(target)


class TestNetwork:
    """Tests for Network and activate()."""

    def test_minimal_genome_outputs_half(self) -> None:
        """Outputs without incoming edges sit at sigmoid(0) = 0.5."""
        assert activate(Genome.minimal(), ZEROS) == [0.5, 0.5, 0.5]

    def test_single_connection(self) -> None:
        """One input->output edge applies the weight then the sigmoid."""
        genome = Genome.minimal()
        wire(genome, 3, 41, 2.0)
        inputs = list(ZEROS)
        inputs[3] = 0.25

        outputs = activate(genome, inputs)
        assert outputs[0] == 0.5
        assert outputs[1] == pytest.approx(steep_sigmoid(0.5))
        assert outputs[2] == 0.5

    def test_disabled_genes_are_ignored(self) -> None:
        """Disabled connections contribute nothing."""
        genome = Genome.minimal()
        wire(genome, 0, 40, 5.0)
        genome.connections[1].enabled = False
        inputs = [1.0] * 40

        assert activate(genome, inputs)[0] == 0.5

    def test_hidden_chain(self) -> None:
        """Values flow through hidden nodes in dependency order."""
        genome = with_hidden(43)
        wire(genome, 0, 43, 1.0, innovation=121)
        wire(genome, 43, 40, 1.0, innovation=122)
        inputs = list(ZEROS)
        inputs[0] = 1.0

        expected = steep_sigmoid(steep_sigmoid(1.0))
        assert activate(genome, inputs)[0] == pytest.approx(expected)

    def test_recurrent_edge_reads_previous_tick(self) -> None:
        """A delayed edge reads 0 on the first tick and the stored value afterwards."""
        genome = with_hidden(43)
        wire(genome, 0, 43, 1.0, innovation=121)
        wire(genome, 43, 40, 1.0, innovation=122)
        wire(genome, 40, 43, 2.0, innovation=123)
        network = Network.from_genome(genome)
        inputs = list(ZEROS)
        inputs[0] = 1.0

        first, memory = network.activate(inputs)
        hidden_1 = steep_sigmoid(1.0)
        assert first[0] == pytest.approx(steep_sigmoid(hidden_1))

        second, _ = network.activate(inputs, memory)
        hidden_2 = steep_sigmoid(1.0 + 2.0 * first[0])
        assert second[0] == pytest.approx(steep_sigmoid(hidden_2))

    def test_wrong_input_count_rejected(self) -> None:
        """Activating with the wrong number of inputs is an input error."""
        with pytest.raises(SimInputError):
            activate(Genome.minimal(), [0.0] * 39)

    def test_outputs_stay_in_unit_interval(self) -> None:
        """Outputs are within [0, 1] for any weights."""
        genome = Genome.minimal()
        rng = np.random.default_rng(4)
        for source in range(40):
            wire(genome, source, 40 + source % 3, float(rng.uniform(-5, 5)))
        for _ in range(20):
            outputs = activate(genome, rng.uniform(0, 1, 40).tolist())
            assert all(0.0 <= o <= 1.0 for o in outputs)


class TestGenomeController:
    """Tests for GenomeController."""

    def _recurrent_genome(self) -> Genome:
        genome = with_hidden(43)
        wire(genome, 0, 43, 1.0, innovation=121)
        wire(genome, 43, 40, 1.0, innovation=122)
        wire(genome, 40, 43, -3.0, innovation=123)
        return genome

    def test_memory_is_kept_per_unit(self) -> None:
        """Two units sharing the network do not share recurrent state."""
        controller = GenomeController(self._recurrent_genome())
        values = np.ones(40)

        first_a = controller(SensorVector(0, values))
        second_a = controller(SensorVector(0, values))
        first_b = controller(SensorVector(1, values))

        assert first_b == first_a
        assert second_a != first_a

    def test_reset_clears_memory(self) -> None:
        """After reset() the controller behaves like a fresh one."""
        controller = GenomeController(self._recurrent_genome())
        values = np.ones(40)
        first = controller(SensorVector(0, values))
        controller(SensorVector(0, values))
        controller.reset()

        assert controller(SensorVector(0, values)) == first
