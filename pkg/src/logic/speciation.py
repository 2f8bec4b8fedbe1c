"""
Speciation and reproduction for MicroNEAT
Compatibility-threshold species, fitness sharing, elitism and offspring generation
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..models import EvolutionConfig
from .genome import Genome, InnovationRegistry, config_distance, crossover, mutate

logger = logging.getLogger(__name__)


def round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def fitness_of(genome: Genome) -> float:
    return genome.fitness if genome.fitness is not None else 0.0


def ranked(genomes: Sequence[Genome]) -> List[Genome]:
    """Best first; equal fitness goes to the lower key"""
    return sorted(genomes, key=lambda g: (-fitness_of(g), g.key))


@dataclass
class Species:
    key: int
    representative: Genome
    members: List[Genome] = field(default_factory=list)
    created: int = 0
    last_improved: int = 0
    best_fitness: Optional[float] = None
    best_fitness_history: List[float] = field(default_factory=list)

    @property
    def mean_fitness(self) -> float:
        if not self.members:
            return 0.0
        return sum(fitness_of(g) for g in self.members) / len(self.members)

    def record_fitness(self, generation: int):
        """Append this generation's best member fitness and track improvement"""
        best = max(fitness_of(g) for g in self.members)
        self.best_fitness_history.append(best)
        if self.best_fitness is None or best > self.best_fitness:
            self.best_fitness = best
            self.last_improved = generation

    def is_stagnant(self, generation: int, limit: int) -> bool:
        return generation - self.last_improved >= limit

    def to_dict(self) -> dict:
        return {
            'key': self.key,
            'representative': self.representative.to_dict(),
            'members': [g.key for g in self.members],
            'created': self.created,
            'last_improved': self.last_improved,
            'best_fitness': self.best_fitness,
            'best_fitness_history': list(self.best_fitness_history),
        }

    @classmethod
    def from_dict(cls, data: dict, population: Optional[Dict[int, Genome]] = None) -> 'Species':
        population = population or {}
        return cls(
            key=int(data['key']),
            representative=Genome.from_dict(data['representative']),
            members=[population[k] for k in data.get('members', []) if k in population],
            created=int(data.get('created', 0)),
            last_improved=int(data.get('last_improved', 0)),
            best_fitness=data.get('best_fitness'),
            best_fitness_history=[float(v) for v in data.get('best_fitness_history', [])],
        )


@dataclass
class SpeciesSet:
    """The species of one generation plus the adaptive compatibility threshold"""
    species: List[Species] = field(default_factory=list)
    threshold: float = 3.0
    next_key: int = 1

    def __len__(self):
        return len(self.species)

    def species_of(self, genome_key: int) -> Optional[Species]:
        for species in self.species:
            if any(g.key == genome_key for g in species.members):
                return species
        return None

    def to_dict(self) -> dict:
        return {
            'threshold': self.threshold,
            'next_key': self.next_key,
            'species': [s.to_dict() for s in self.species],
        }

    @classmethod
    def from_dict(cls, data: dict, population: Optional[Sequence[Genome]] = None) -> 'SpeciesSet':
        by_key = {g.key: g for g in population or []}
        return cls(
            species=[Species.from_dict(s, by_key) for s in data.get('species', [])],
            threshold=float(data['threshold']),
            next_key=int(data.get('next_key', 1)),
        )


# === SPECIATION ===

def speciate(population: Sequence[Genome], species_set: Optional[SpeciesSet],
             config: EvolutionConfig, generation: int = 0) -> SpeciesSet:
    """
    Partition the population into species.

    Each carried-over species first claims the unassigned genome closest to its old
    representative, provided it lies below the threshold; a species that claims
    nothing dies out. Every other genome joins the first species whose representative
    lies below the threshold, or founds a new one. The threshold is then nudged
    toward target_species for the next call.
    """
    if species_set is None:
        species_set = SpeciesSet(threshold=config.compat_threshold)
    threshold = species_set.threshold
    next_key = species_set.next_key
    unassigned = list(population)
    result: List[Species] = []

    for old in species_set.species:
        if not unassigned:
            break
        distances = [config_distance(old.representative, g, config) for g in unassigned]
        index = int(np.argmin(distances))
        if distances[index] >= threshold:
            continue
        closest = unassigned.pop(index)
        result.append(Species(
            key=old.key,
            representative=closest,
            members=[closest],
            created=old.created,
            last_improved=old.last_improved,
            best_fitness=old.best_fitness,
            best_fitness_history=list(old.best_fitness_history),
        ))

    for genome in unassigned:
        for species in result:
            if config_distance(species.representative, genome, config) < threshold:
                species.members.append(genome)
                break
        else:
            result.append(Species(key=next_key, representative=genome, members=[genome],
                                  created=generation, last_improved=generation))
            next_key += 1

    if len(result) < config.target_species:
        threshold *= 1.0 - config.threshold_adjust
    elif len(result) > config.target_species:
        threshold *= 1.0 + config.threshold_adjust
    threshold = max(config.min_threshold, threshold)

    logger.debug("generation %d: %d species, next threshold %.3f", generation, len(result), threshold)
    return SpeciesSet(species=result, threshold=threshold, next_key=next_key)


# === REPRODUCTION ===

def offspring_quotas(species: Sequence[Species], population_size: int,
                     champion_key: Optional[int] = None) -> Dict[int, int]:
    """Largest-remainder split of the population proportional to species mean fitness"""
    if not species:
        return {}
    shares = [s.mean_fitness for s in species]
    total = sum(shares)
    if total <= 0:
        shares = [1.0] * len(species)
        total = float(len(species))
    raw = [population_size * share / total for share in shares]
    quotas = {s.key: int(math.floor(r)) for s, r in zip(species, raw)}
    leftover = population_size - sum(quotas.values())
    by_remainder = sorted(zip(species, raw), key=lambda item: (-(item[1] - math.floor(item[1])), item[0].key))
    for s, _ in by_remainder[:leftover]:
        quotas[s.key] += 1

    if champion_key is not None and quotas.get(champion_key, 0) == 0:
        donor = max((k for k in quotas if k != champion_key), key=lambda k: (quotas[k], -k))
        quotas[donor] -= 1
        quotas[champion_key] = 1
    return quotas


def next_generation(population: Sequence[Genome], species_set: SpeciesSet,
                    registry: InnovationRegistry, config: EvolutionConfig,
                    rng: np.random.Generator, fitnesses: Optional[Sequence[float]] = None,
                    generation: int = 0) -> List[Genome]:
    """
    Offspring population of the same size.

    Stagnant species stop reproducing unless they hold the champion, and are removed
    from species_set so the next speciate() call forgets them. Elites are copied
    unchanged (key and fitness kept); every other child gets a fresh key.
    """
    if fitnesses is not None:
        for genome, value in zip(population, fitnesses):
            genome.fitness = float(value)

    living = [s for s in species_set.species if s.members]
    for species in living:
        species.record_fitness(generation)

    champion = ranked(population)[0]
    champion_species = next(s for s in living if any(g is champion for g in s.members))
    breeding = [
        s for s in living
        if s is champion_species or not s.is_stagnant(generation, config.stagnation_limit)
    ]
    dropped = len(living) - len(breeding)
    if dropped:
        logger.info("generation %d: %d stagnant species stop reproducing", generation, dropped)
    species_set.species = breeding

    quotas = offspring_quotas(breeding, config.population_size, champion_species.key)
    pools = {}
    for species in breeding:
        members = ranked(species.members)
        pool_size = max(1, round_half_up(config.selection_proportion * len(members)))
        pools[species.key] = members[:pool_size]

    offspring: List[Genome] = []
    for species in breeding:
        quota = quotas[species.key]
        if quota <= 0:
            continue
        members = ranked(species.members)
        n_elite = min(quota, round_half_up(config.elitism_proportion * len(members)))
        if species is champion_species:
            n_elite = max(1, n_elite)
        offspring.extend(g.copy() for g in members[:n_elite])

        pool = pools[species.key]
        n_children = quota - n_elite
        n_asexual = round_half_up(n_children * config.asexual_proportion)
        for index in range(n_children):
            parent = pool[int(rng.integers(len(pool)))]
            if index < n_asexual:
                child = mutate(parent, registry, config, rng)
            else:
                mate_pool = pool
                others = [k for k in pools if k != species.key]
                if others and rng.random() < config.interspecies_mating_rate:
                    mate_pool = pools[others[int(rng.integers(len(others)))]]
                mate = mate_pool[int(rng.integers(len(mate_pool)))]
                child = crossover(parent, mate, rng, config.reenable_prob)
                child = mutate(child, registry, config, rng)
            child.key = registry.new_genome_key()
            offspring.append(child)

    registry.start_generation()
    return offspring
