"""
Network evaluation for MicroNEAT
Compiles a genome into an evaluation order and runs it, with one-tick delayed recurrent edges
"""
import heapq
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set, Tuple

from ..errors import SimInputError
from ..models import NUM_INPUTS
from .genome import Genome
from .sensors import SensorVector

SIGMOID_SLOPE = 4.9
SIGMOID_CLAMP = 60.0

# (source node, weight, reads previous tick)
Incoming = Tuple[int, float, bool]


def steep_sigmoid(z: float) -> float:
    """Logistic curve with slope 4.9, range (0, 1)"""
    x = max(-SIGMOID_CLAMP, min(SIGMOID_CLAMP, SIGMOID_SLOPE * z))
    return 1.0 / (1.0 + math.exp(-x))


def recurrent_edges(nodes: Sequence[int], edges: Sequence[Tuple[int, int]]) -> Set[Tuple[int, int]]:
    """Back edges of a depth-first search visiting nodes and successors in id order"""
    successors: Dict[int, List[int]] = {n: [] for n in nodes}
    for source, target in edges:
        successors.setdefault(source, []).append(target)
        successors.setdefault(target, [])
    for targets in successors.values():
        targets.sort()

    state: Dict[int, int] = {}  # 1 on the stack, 2 finished
    back = set()
    for root in sorted(successors):
        if root in state:
            continue
        state[root] = 1
        stack = [(root, iter(successors[root]))]
        while stack:
            node, children = stack[-1]
            child = next(children, None)
            if child is None:
                state[node] = 2
                stack.pop()
            elif state.get(child) == 1:
                back.add((node, child))
            elif child not in state:
                state[child] = 1
                stack.append((child, iter(successors[child])))
    return back


def evaluation_order(nodes: Sequence[int], edges: Sequence[Tuple[int, int]]) -> List[int]:
    """Topological order of an acyclic edge set; ready nodes are taken lowest id first"""
    indegree = {n: 0 for n in nodes}
    successors: Dict[int, List[int]] = {n: [] for n in nodes}
    for source, target in edges:
        indegree[target] += 1
        successors[source].append(target)
    ready = [n for n, d in indegree.items() if d == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        node = heapq.heappop(ready)
        order.append(node)
        for target in successors[node]:
            indegree[target] -= 1
            if indegree[target] == 0:
                heapq.heappush(ready, target)
    return order


@dataclass
class Network:
    """Compiled phenotype of a genome; holds no activation state of its own"""
    input_ids: List[int]
    output_ids: List[int]
    order: List[Tuple[int, List[Incoming]]]

    @classmethod
    def from_genome(cls, genome: Genome) -> 'Network':
        node_ids = sorted(genome.nodes)
        genes = genome.enabled_genes
        edges = [g.pair for g in genes]
        back = recurrent_edges(node_ids, edges)
        forward = [e for e in edges if e not in back]

        incoming: Dict[int, List[Incoming]] = {n: [] for n in node_ids}
        for gene in genes:
            incoming[gene.target].append((gene.source, gene.weight, gene.pair in back))

        inputs = set(genome.input_ids)
        order = [(n, incoming[n]) for n in evaluation_order(node_ids, forward) if n not in inputs]
        return cls(input_ids=genome.input_ids, output_ids=genome.output_ids, order=order)

    def activate(self, inputs: Sequence[float],
                 memory: Optional[Dict[int, float]] = None) -> Tuple[List[float], Dict[int, float]]:
        """
        One forward pass. `memory` holds the previous tick's node values (missing
        entries read as 0); the returned dict is the memory for the next tick.
        """
        if len(inputs) != len(self.input_ids):
            raise SimInputError(f"expected {len(self.input_ids)} inputs, got {len(inputs)}")
        previous = memory or {}
        values = {node: float(inputs[i]) for i, node in enumerate(self.input_ids)}
        for node, edges in self.order:
            total = 0.0
            for source, weight, delayed in edges:
                total += weight * (previous.get(source, 0.0) if delayed else values[source])
            values[node] = steep_sigmoid(total)
        outputs = [values[o] for o in self.output_ids]
        return outputs, {n: v for n, v in values.items() if n >= NUM_INPUTS}


def activate(genome: Genome, inputs: Sequence[float],
             memory: Optional[Dict[int, float]] = None) -> List[float]:
    """Three outputs in [0, 1] for one input vector, starting from an empty memory"""
    outputs, _ = Network.from_genome(genome).activate(inputs, memory)
    return outputs


class GenomeController:
    """
    Episode controller driven by one genome.

    Every ranged unit shares the network but keeps its own recurrent memory,
    keyed on SensorVector.unit_id.
    """

    def __init__(self, genome: Genome):
        self.genome_key = genome.key
        self.network = Network.from_genome(genome)
        self._memory: Dict[int, Dict[int, float]] = {}

    def reset(self):
        self._memory.clear()

    def __call__(self, sensors: SensorVector) -> List[float]:
        outputs, self._memory[sensors.unit_id] = self.network.activate(
            sensors.values, self._memory.get(sensors.unit_id))
        return outputs
