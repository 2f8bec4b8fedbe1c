"""
NEAT genomes for MicroNEAT
Node and connection genes, historical markings and the variation operators
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..models import EvolutionConfig, NUM_INPUTS, NUM_OUTPUTS

logger = logging.getLogger(__name__)


# === NODE NUMBERING ===
INPUT_IDS = tuple(range(NUM_INPUTS))
OUTPUT_IDS = tuple(range(NUM_INPUTS, NUM_INPUTS + NUM_OUTPUTS))
FIRST_HIDDEN_ID = NUM_INPUTS + NUM_OUTPUTS
BASE_INNOVATIONS = NUM_INPUTS * NUM_OUTPUTS  # input->output genes own innovations 1..120

DEFAULT_ACTIVATION = "sigmoid"


class NodeKind(str, Enum):
    INPUT = "input"
    OUTPUT = "output"
    HIDDEN = "hidden"


def base_innovation(source: int, target: int) -> Optional[int]:
    """Fixed innovation of an input->output gene, shared by every genome of every run"""
    if source in INPUT_IDS and target in OUTPUT_IDS:
        return source * NUM_OUTPUTS + (target - OUTPUT_IDS[0]) + 1
    return None


@dataclass
class NodeGene:
    id: int
    kind: NodeKind
    activation: str = DEFAULT_ACTIVATION

    def to_dict(self) -> dict:
        return {'id': self.id, 'kind': self.kind.value, 'activation': self.activation}

    @classmethod
    def from_dict(cls, data: dict) -> 'NodeGene':
        return cls(
            id=int(data['id']),
            kind=NodeKind(data['kind']),
            activation=data.get('activation', DEFAULT_ACTIVATION),
        )


@dataclass
class ConnectionGene:
    innovation: int
    source: int
    target: int
    weight: float
    enabled: bool = True

    @property
    def pair(self) -> Tuple[int, int]:
        return (self.source, self.target)

    def copy(self) -> 'ConnectionGene':
        return ConnectionGene(self.innovation, self.source, self.target, self.weight, self.enabled)

    def to_dict(self) -> dict:
        return {
            'innovation': self.innovation,
            'source': self.source,
            'target': self.target,
            'weight': self.weight,
            'enabled': self.enabled,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'ConnectionGene':
        return cls(
            innovation=int(data['innovation']),
            source=int(data['source']),
            target=int(data['target']),
            weight=float(data['weight']),
            enabled=bool(data.get('enabled', True)),
        )


@dataclass
class Genome:
    """NEAT chromosome; connections are keyed by innovation number"""
    key: int
    nodes: Dict[int, NodeGene] = field(default_factory=dict)
    connections: Dict[int, ConnectionGene] = field(default_factory=dict)
    fitness: Optional[float] = None

    @classmethod
    def minimal(cls, key: int = 0) -> 'Genome':
        """40 inputs, 3 outputs, no hidden nodes and no connections"""
        nodes = {i: NodeGene(i, NodeKind.INPUT) for i in INPUT_IDS}
        nodes.update({o: NodeGene(o, NodeKind.OUTPUT) for o in OUTPUT_IDS})
        return cls(key=key, nodes=nodes)

    @property
    def input_ids(self) -> List[int]:
        return sorted(n.id for n in self.nodes.values() if n.kind is NodeKind.INPUT)

    @property
    def output_ids(self) -> List[int]:
        return sorted(n.id for n in self.nodes.values() if n.kind is NodeKind.OUTPUT)

    @property
    def hidden_ids(self) -> List[int]:
        return sorted(n.id for n in self.nodes.values() if n.kind is NodeKind.HIDDEN)

    @property
    def genes(self) -> List[ConnectionGene]:
        """Connection genes in innovation order"""
        return [self.connections[i] for i in sorted(self.connections)]

    @property
    def enabled_genes(self) -> List[ConnectionGene]:
        return [g for g in self.genes if g.enabled]

    @property
    def pairs(self) -> Dict[Tuple[int, int], int]:
        return {g.pair: g.innovation for g in self.connections.values()}

    @property
    def max_innovation(self) -> int:
        return max(self.connections) if self.connections else 0

    def copy(self) -> 'Genome':
        return Genome(
            key=self.key,
            nodes={i: NodeGene(n.id, n.kind, n.activation) for i, n in self.nodes.items()},
            connections={i: g.copy() for i, g in self.connections.items()},
            fitness=self.fitness,
        )

    def same_structure(self, other: 'Genome') -> bool:
        """Identical nodes and connection genes (fitness and key ignored)"""
        return (
            {i: n.to_dict() for i, n in self.nodes.items()} == {i: n.to_dict() for i, n in other.nodes.items()}
            and {i: g.to_dict() for i, g in self.connections.items()}
            == {i: g.to_dict() for i, g in other.connections.items()}
        )

    def problems(self, weight_range: Optional[float] = None) -> List[str]:
        """Every violated structural invariant, as readable messages"""
        issues = []
        if len(self.input_ids) != NUM_INPUTS:
            issues.append(f"expected {NUM_INPUTS} input nodes, found {len(self.input_ids)}")
        if len(self.output_ids) != NUM_OUTPUTS:
            issues.append(f"expected {NUM_OUTPUTS} output nodes, found {len(self.output_ids)}")
        enabled_pairs = set()
        for innovation, gene in self.connections.items():
            if gene.innovation != innovation:
                issues.append(f"gene stored under {innovation} carries innovation {gene.innovation}")
            if gene.source not in self.nodes or gene.target not in self.nodes:
                issues.append(f"gene {innovation} references a missing node ({gene.source}->{gene.target})")
            elif self.nodes[gene.target].kind is NodeKind.INPUT:
                issues.append(f"gene {innovation} targets input node {gene.target}")
            if gene.enabled:
                if gene.pair in enabled_pairs:
                    issues.append(f"duplicate enabled connection {gene.source}->{gene.target}")
                enabled_pairs.add(gene.pair)
            if weight_range is not None and abs(gene.weight) > weight_range + 1e-12:
                issues.append(f"gene {innovation} weight {gene.weight} outside +-{weight_range}")
        return issues

    def to_dict(self) -> dict:
        return {
            'key': self.key,
            'fitness': self.fitness,
            'nodes': [self.nodes[i].to_dict() for i in sorted(self.nodes)],
            'connections': [g.to_dict() for g in self.genes],
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'Genome':
        nodes = [NodeGene.from_dict(n) for n in data.get('nodes', [])]
        genes = [ConnectionGene.from_dict(c) for c in data.get('connections', [])]
        fitness = data.get('fitness')
        return cls(
            key=int(data.get('key', 0)),
            nodes={n.id: n for n in nodes},
            connections={g.innovation: g for g in genes},
            fitness=None if fitness is None else float(fitness),
        )


# === INNOVATION REGISTRY ===

class InnovationRegistry:
    """
    Hands out innovation numbers, hidden node ids and genome keys.

    Structural mutations seen within the current generation get the numbers they
    got the first time; start_generation() forgets them. Input->output genes always
    map onto their fixed base innovations.
    """

    def __init__(self, next_innovation: int = BASE_INNOVATIONS + 1,
                 next_node_id: int = FIRST_HIDDEN_ID, next_genome_key: int = 0):
        self.next_innovation = next_innovation
        self.next_node_id = next_node_id
        self.next_genome_key = next_genome_key
        self._connections: Dict[Tuple[int, int], int] = {}
        self._splits: Dict[int, Tuple[int, int, int]] = {}

    def connection_innovation(self, source: int, target: int) -> int:
        base = base_innovation(source, target)
        if base is not None:
            return base
        key = (source, target)
        if key not in self._connections:
            self._connections[key] = self._take_innovation()
        return self._connections[key]

    def split(self, gene: ConnectionGene, taken_nodes=()) -> Tuple[int, int, int]:
        """(hidden node id, innovation in, innovation out) for splitting a gene"""
        cached = self._splits.get(gene.innovation)
        if cached is not None and cached[0] not in taken_nodes:
            return cached
        node_id = self._take_node_id()
        result = (node_id, self._take_innovation(), self._take_innovation())
        if cached is None:
            self._splits[gene.innovation] = result
        return result

    def new_genome_key(self) -> int:
        key = self.next_genome_key
        self.next_genome_key += 1
        return key

    def start_generation(self):
        self._connections.clear()
        self._splits.clear()

    def _take_innovation(self) -> int:
        value = self.next_innovation
        self.next_innovation += 1
        return value

    def _take_node_id(self) -> int:
        value = self.next_node_id
        self.next_node_id += 1
        return value

    def to_dict(self) -> dict:
        return {
            'next_innovation': self.next_innovation,
            'next_node_id': self.next_node_id,
            'next_genome_key': self.next_genome_key,
            'connections': [[s, t, i] for (s, t), i in sorted(self._connections.items())],
            'splits': [[i] + list(v) for i, v in sorted(self._splits.items())],
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'InnovationRegistry':
        registry = cls(
            next_innovation=int(data['next_innovation']),
            next_node_id=int(data['next_node_id']),
            next_genome_key=int(data.get('next_genome_key', 0)),
        )
        registry._connections = {(int(s), int(t)): int(i) for s, t, i in data.get('connections', [])}
        registry._splits = {int(i): (int(n), int(a), int(b)) for i, n, a, b in data.get('splits', [])}
        return registry

    @classmethod
    def for_population(cls, population: List[Genome]) -> 'InnovationRegistry':
        """Registry whose counters lie above everything a loaded population uses"""
        innovation = max([BASE_INNOVATIONS] + [g.max_innovation for g in population]) + 1
        node = max([FIRST_HIDDEN_ID - 1] + [max(g.nodes) for g in population if g.nodes]) + 1
        key = max([-1] + [g.key for g in population]) + 1
        return cls(innovation, node, key)


# === POPULATION ===

def seed_population(config: EvolutionConfig, registry: InnovationRegistry,
                    rng: np.random.Generator) -> List[Genome]:
    """Minimal genomes, each input->output gene present with initial_connection_prob"""
    population = []
    w = config.weight_range
    for _ in range(config.population_size):
        genome = Genome.minimal(registry.new_genome_key())
        for source in INPUT_IDS:
            for target in OUTPUT_IDS:
                if rng.random() < config.initial_connection_prob:
                    innovation = registry.connection_innovation(source, target)
                    genome.connections[innovation] = ConnectionGene(
                        innovation, source, target, float(rng.uniform(-w, w)))
        population.append(genome)
    logger.debug("seeded %d genomes (mean %.1f connections)", len(population),
                 np.mean([len(g.connections) for g in population]) if population else 0.0)
    return population


# === MUTATION ===

def mutate_weights(genome: Genome, config: EvolutionConfig, rng: np.random.Generator):
    w = config.weight_range
    for gene in genome.genes:
        if rng.random() < config.weight_replace_prob:
            gene.weight = float(rng.uniform(-w, w))
        else:
            gene.weight = float(np.clip(gene.weight + rng.normal(0.0, config.weight_perturb_sigma), -w, w))


def add_node(genome: Genome, registry: InnovationRegistry, config: EvolutionConfig,
             rng: np.random.Generator) -> bool:
    """Split an enabled connection a->b into a->h (weight 1) and h->b (old weight)"""
    candidates = genome.enabled_genes
    if not candidates:
        return False
    gene = candidates[int(rng.integers(len(candidates)))]
    node_id, innovation_in, innovation_out = registry.split(gene, genome.nodes)
    gene.enabled = False
    genome.nodes[node_id] = NodeGene(node_id, NodeKind.HIDDEN)
    genome.connections[innovation_in] = ConnectionGene(
        innovation_in, gene.source, node_id, float(min(1.0, config.weight_range)))
    genome.connections[innovation_out] = ConnectionGene(
        innovation_out, node_id, gene.target, gene.weight)
    return True


def add_connection(genome: Genome, registry: InnovationRegistry, config: EvolutionConfig,
                   rng: np.random.Generator) -> bool:
    """Insert one missing edge; recurrent edges are allowed, self-loops are not"""
    existing = genome.pairs
    targets = [i for i in sorted(genome.nodes) if genome.nodes[i].kind is not NodeKind.INPUT]
    candidates = [
        (source, target)
        for source in sorted(genome.nodes)
        for target in targets
        if source != target and (source, target) not in existing
    ]
    if not candidates:
        return False
    source, target = candidates[int(rng.integers(len(candidates)))]
    innovation = registry.connection_innovation(source, target)
    w = config.weight_range
    genome.connections[innovation] = ConnectionGene(innovation, source, target, float(rng.uniform(-w, w)))
    return True


def delete_connection(genome: Genome, rng: np.random.Generator) -> bool:
    """Remove one gene at random, then any hidden node left without connections"""
    if not genome.connections:
        return False
    innovations = sorted(genome.connections)
    del genome.connections[innovations[int(rng.integers(len(innovations)))]]
    used = {n for g in genome.connections.values() for n in g.pair}
    for node_id in genome.hidden_ids:
        if node_id not in used:
            del genome.nodes[node_id]
    return True


def mutate(genome: Genome, registry: InnovationRegistry, config: EvolutionConfig,
           rng: np.random.Generator) -> Genome:
    """Mutated copy; the four operators are independent draws applied in a fixed order"""
    child = genome.copy()
    child.fitness = None
    draws = rng.random(4)
    if draws[0] < config.weight_mutation_prob:
        mutate_weights(child, config, rng)
    if draws[1] < config.add_node_prob:
        add_node(child, registry, config, rng)
    if draws[2] < config.add_connection_prob:
        add_connection(child, registry, config, rng)
    if draws[3] < config.delete_connection_prob:
        delete_connection(child, rng)
    return child


# === CROSSOVER ===

def crossover(parent_a: Genome, parent_b: Genome, rng: np.random.Generator,
              reenable_prob: float = 0.25, key: Optional[int] = None) -> Genome:
    """
    Child of two parents aligned on innovation numbers.

    Matching genes come from either parent at random; disjoint and excess genes come
    from the fitter parent, or from both when fitness ties. A gene disabled in either
    parent is enabled in the child with probability reenable_prob.
    """
    fa = parent_a.fitness or 0.0
    fb = parent_b.fitness or 0.0
    take_a = fa >= fb
    take_b = fb >= fa

    chosen: List[Tuple[ConnectionGene, bool]] = []
    for innovation in sorted(set(parent_a.connections) | set(parent_b.connections)):
        gene_a = parent_a.connections.get(innovation)
        gene_b = parent_b.connections.get(innovation)
        if gene_a is not None and gene_b is not None:
            gene = (gene_a if rng.random() < 0.5 else gene_b).copy()
            disabled = not (gene_a.enabled and gene_b.enabled)
        elif gene_a is not None and take_a:
            gene, disabled = gene_a.copy(), not gene_a.enabled
        elif gene_b is not None and take_b:
            gene, disabled = gene_b.copy(), not gene_b.enabled
        else:
            continue
        chosen.append((gene, disabled))

    child = Genome.minimal(parent_a.key if key is None else key)
    seen_pairs = set()
    for gene, disabled in chosen:
        if gene.pair in seen_pairs:
            continue
        seen_pairs.add(gene.pair)
        if disabled:
            gene.enabled = bool(rng.random() < reenable_prob)
        child.connections[gene.innovation] = gene
        for node_id in gene.pair:
            if node_id not in child.nodes:
                source = parent_a.nodes.get(node_id) or parent_b.nodes[node_id]
                child.nodes[node_id] = NodeGene(source.id, source.kind, source.activation)
    return child


# === DISTANCE ===

def compatibility_distance(a: Genome, b: Genome, excess_coeff: float = 1.0,
                           disjoint_coeff: float = 1.0, weight_coeff: float = 0.4) -> float:
    """c1*E/N + c2*D/N + c3*mean|dw| over matching genes; N=1 below 20 genes"""
    if not a.connections and not b.connections:
        return 0.0
    cutoff = min(a.max_innovation, b.max_innovation)
    excess = disjoint = 0
    weight_diff = 0.0
    matching = 0
    for innovation in sorted(set(a.connections) | set(b.connections)):
        gene_a = a.connections.get(innovation)
        gene_b = b.connections.get(innovation)
        if gene_a is not None and gene_b is not None:
            matching += 1
            weight_diff += abs(gene_a.weight - gene_b.weight)
        elif innovation > cutoff:
            excess += 1
        else:
            disjoint += 1
    size = max(len(a.connections), len(b.connections))
    n = 1.0 if size < 20 else float(size)
    mean_diff = weight_diff / matching if matching else 0.0
    return excess_coeff * excess / n + disjoint_coeff * disjoint / n + weight_coeff * mean_diff


def config_distance(a: Genome, b: Genome, config: EvolutionConfig) -> float:
    return compatibility_distance(a, b, config.compat_excess, config.compat_disjoint, config.compat_weight)
