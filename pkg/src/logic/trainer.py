"""
Training orchestration for MicroNEAT
Generation loop with statistics, checkpoint/resume and the generalization sweep
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from ..errors import ConfigError, OrchestrationError
from ..models import EvolutionConfig, Formation, Scenario
from .combat import Controller, run_episode
from .evaluation import WorkerPool, episode_fitness, evaluate_population
from .genome import Genome, InnovationRegistry, seed_population
from .network import GenomeController
from .scenarios import SWEEP_FORMATIONS, TrainingSet, derive_seed
from .speciation import SpeciesSet, fitness_of, next_generation, ranked, speciate

logger = logging.getLogger(__name__)

STATS_HEADER = (
    'generation', 'best', 'mean', 'best_so_far', 'species', 'threshold',
    'mean_connections', 'mean_hidden', 'percent_of_max', 'best_found_generation',
)

SWEEP_HEADER = (
    'formation', 'zealots', 'repeats', 'mean_remaining_ranged', 'mean_remaining_melee', 'mean_fitness',
)

DEFAULT_CHECKPOINT_EVERY = 5


# === STATISTICS ===

@dataclass
class GenerationStats:
    """One row of the statistics stream"""
    generation: int
    best: float
    mean: float
    best_so_far: float
    species: int
    threshold: float
    mean_connections: float
    mean_hidden: float
    percent_of_max: float
    best_found_generation: int

    def row(self) -> list:
        return [
            self.generation,
            f"{self.best:.6f}",
            f"{self.mean:.6f}",
            f"{self.best_so_far:.6f}",
            self.species,
            f"{self.threshold:.6f}",
            f"{self.mean_connections:.4f}",
            f"{self.mean_hidden:.4f}",
            f"{self.percent_of_max:.4f}",
            self.best_found_generation,
        ]

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in STATS_HEADER}

    @classmethod
    def from_dict(cls, data: dict) -> 'GenerationStats':
        return cls(
            generation=int(data['generation']),
            best=float(data['best']),
            mean=float(data['mean']),
            best_so_far=float(data['best_so_far']),
            species=int(data['species']),
            threshold=float(data['threshold']),
            mean_connections=float(data['mean_connections']),
            mean_hidden=float(data['mean_hidden']),
            percent_of_max=float(data['percent_of_max']),
            best_found_generation=int(data['best_found_generation']),
        )


# === STATE ===

def _new_rng(state: Optional[dict] = None, seed: int = 0) -> np.random.Generator:
    rng = np.random.default_rng(seed)
    if state is not None:
        rng.bit_generator.state = state
    return rng


@dataclass
class EvolutionState:
    """
    Everything the generation loop carries forward.

    `generation` is the index of the next generation to evaluate; `population`
    holds that generation's genomes, not yet evaluated.
    """
    generation: int
    population: List[Genome]
    registry: InnovationRegistry
    rng: np.random.Generator
    species_set: Optional[SpeciesSet] = None
    history: List[GenerationStats] = field(default_factory=list)
    best: Optional[Genome] = None
    best_generation: int = -1
    completed: bool = False
    config_hash: str = ""

    @classmethod
    def initial(cls, config: EvolutionConfig, config_hash: str = "") -> 'EvolutionState':
        rng = _new_rng(seed=config.seed)
        registry = InnovationRegistry()
        population = seed_population(config, registry, rng)
        return cls(generation=0, population=population, registry=registry, rng=rng,
                   config_hash=config_hash)

    def to_dict(self) -> dict:
        return {
            'generation': self.generation,
            'config_hash': self.config_hash,
            'completed': self.completed,
            'population': [g.to_dict() for g in self.population],
            'species': self.species_set.to_dict() if self.species_set is not None else None,
            'registry': self.registry.to_dict(),
            'rng': self.rng.bit_generator.state,
            'history': [s.to_dict() for s in self.history],
            'best': self.best.to_dict() if self.best is not None else None,
            'best_generation': self.best_generation,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'EvolutionState':
        population = [Genome.from_dict(g) for g in data['population']]
        species = data.get('species')
        best = data.get('best')
        return cls(
            generation=int(data['generation']),
            population=population,
            registry=InnovationRegistry.from_dict(data['registry']),
            rng=_new_rng(data['rng']),
            species_set=SpeciesSet.from_dict(species) if species is not None else None,
            history=[GenerationStats.from_dict(s) for s in data.get('history', [])],
            best=Genome.from_dict(best) if best is not None else None,
            best_generation=int(data.get('best_generation', -1)),
            completed=bool(data.get('completed', False)),
            config_hash=data.get('config_hash', ""),
        )


@dataclass
class TrainingResult:
    best: Genome
    best_generation: int
    history: List[GenerationStats]
    max_fitness: float

    @property
    def best_fitness(self) -> float:
        return fitness_of(self.best)

    @property
    def percent_of_max(self) -> float:
        return 100.0 * self.best_fitness / self.max_fitness if self.max_fitness else 0.0


# === TRAINER ===

class Trainer:
    """
    Runs seed -> evaluate -> speciate -> reproduce for generations 0..N.

    With a RunStore attached, the statistics CSV and the best genome are rewritten
    after every generation and a checkpoint is saved every `checkpoint_every`
    generations. A checkpoint always holds the state at the start of a generation,
    so an interrupted run resumes by replaying that generation.
    """

    def __init__(self, config: EvolutionConfig, training_set: TrainingSet, worker_pool: WorkerPool,
                 store=None, checkpoint_every: int = DEFAULT_CHECKPOINT_EVERY, config_hash: str = "",
                 on_generation: Optional[Callable[[GenerationStats], None]] = None):
        if checkpoint_every < 1:
            raise ConfigError(f"checkpoint_every must be >= 1 (got {checkpoint_every})")
        self.config = config
        self.training_set = training_set
        self.worker_pool = worker_pool
        self.store = store
        self.checkpoint_every = checkpoint_every
        self.config_hash = config_hash
        self.on_generation = on_generation
        self.state: Optional[EvolutionState] = None

    # === CHECKPOINTS ===

    def _save_checkpoint(self, snapshot: dict):
        if self.store is None:
            return
        path = self.store.save_checkpoint(snapshot)
        logger.debug("checkpoint written: %s", path)

    def resume_state(self) -> Optional[EvolutionState]:
        """State of the latest checkpoint in the store, or None when there is none"""
        if self.store is None:
            return None
        found = self.store.load_latest_checkpoint()
        if found is None:
            return None
        path, data = found
        state = EvolutionState.from_dict(data)
        if self.config_hash and state.config_hash and state.config_hash != self.config_hash:
            raise ConfigError("checkpoint was written with a different configuration", path=str(path))
        logger.info("resuming from %s (generation %d)", path.name, state.generation)
        return state

    # === ARTIFACTS ===

    def _write_artifacts(self, state: EvolutionState):
        if self.store is None:
            return
        self.store.write_stats(STATS_HEADER, (s.row() for s in state.history))
        if state.best is not None:
            self.store.save_best(state.best, self.config_hash, state.best_generation)

    # === LOOP ===

    def _record(self, state: EvolutionState, generation: int) -> GenerationStats:
        population = state.population
        champion = ranked(population)[0]
        if state.best is None or fitness_of(champion) > fitness_of(state.best):
            state.best = champion.copy()
            state.best_generation = generation

        max_fitness = self.training_set.max_fitness
        stats = GenerationStats(
            generation=generation,
            best=fitness_of(champion),
            mean=float(np.mean([fitness_of(g) for g in population])),
            best_so_far=fitness_of(state.best),
            species=len(state.species_set),
            threshold=state.species_set.threshold,
            mean_connections=float(np.mean([len(g.enabled_genes) for g in population])),
            mean_hidden=float(np.mean([len(g.hidden_ids) for g in population])),
            percent_of_max=100.0 * fitness_of(state.best) / max_fitness if max_fitness else 0.0,
            best_found_generation=state.best_generation,
        )
        state.history.append(stats)
        logger.info("generation %d: best %.1f mean %.1f species %d threshold %.3f",
                    generation, stats.best, stats.mean, stats.species, stats.threshold)
        return stats

    def run(self, resume: bool = False) -> TrainingResult:
        state = self.resume_state() if resume else None
        if state is None:
            state = EvolutionState.initial(self.config, self.config_hash)
        self.state = state
        last = self.config.generations

        while not state.completed:
            generation = state.generation
            snapshot = state.to_dict()
            if generation > 0 and generation % self.checkpoint_every == 0:
                self._save_checkpoint(snapshot)
            try:
                scenarios = self.training_set.for_generation(self.config.seed, generation)
                evaluate_population(state.population, scenarios, self.worker_pool,
                                    self.config.ranged_hp_weight)
                state.species_set = speciate(state.population, state.species_set, self.config, generation)
                stats = self._record(state, generation)
                if generation >= last:
                    state.generation = generation + 1
                    state.completed = True
                else:
                    state.population = next_generation(
                        state.population, state.species_set, state.registry, self.config,
                        state.rng, generation=generation)
                    state.generation = generation + 1
            except (OrchestrationError, KeyboardInterrupt):
                logger.warning("generation %d interrupted, checkpointing its starting state", generation)
                self._save_checkpoint(snapshot)
                raise
            self._write_artifacts(state)
            if self.on_generation is not None:
                self.on_generation(stats)

        self._save_checkpoint(state.to_dict())
        return TrainingResult(
            best=state.best,
            best_generation=state.best_generation,
            history=list(state.history),
            max_fitness=self.training_set.max_fitness,
        )


def train(config: EvolutionConfig, training_set: TrainingSet, worker_pool: WorkerPool,
          store=None, checkpoint_every: int = DEFAULT_CHECKPOINT_EVERY, config_hash: str = "",
          resume: bool = False) -> TrainingResult:
    """Evolve controllers and return the all-time best genome with the statistics stream"""
    trainer = Trainer(config, training_set, worker_pool, store, checkpoint_every, config_hash)
    return trainer.run(resume=resume)


# === GENERALIZATION SWEEP ===

@dataclass
class SweepRow:
    formation: str
    zealots: int
    repeats: int
    mean_remaining_ranged: float
    mean_remaining_melee: float
    mean_fitness: float

    def row(self) -> list:
        return [
            self.formation,
            self.zealots,
            self.repeats,
            f"{self.mean_remaining_ranged:.4f}",
            f"{self.mean_remaining_melee:.4f}",
            f"{self.mean_fitness:.4f}",
        ]

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in SWEEP_HEADER}


def sweep_scenario(base: Scenario, formation: Formation, zealots: int, repeat: int, seed: int) -> Scenario:
    """Scenario of one sweep episode; its spawn seed depends on every coordinate"""
    position = list(Formation).index(formation)
    return replace(base, formation=formation, melee_count=zealots,
                   spawn_seed=derive_seed(seed, position, zealots, repeat))


def generalization_sweep(controller: Union[Genome, Controller],
                         formations: Sequence[Formation] = SWEEP_FORMATIONS,
                         max_zealots: int = 30, repeats: int = 10,
                         base: Scenario = Scenario(), seed: int = 0,
                         ranged_weight: float = 1.0) -> List[SweepRow]:
    """
    Mean survivors and fitness for every (formation, zealot count in 1..max_zealots),
    averaged over `repeats` episodes with distinct spawn seeds.
    """
    if max_zealots < 1:
        raise ConfigError(f"max_zealots must be >= 1 (got {max_zealots})")
    if repeats < 1:
        raise ConfigError(f"repeats must be >= 1 (got {repeats})")
    if isinstance(controller, Genome):
        controller = GenomeController(controller)

    rows = []
    for formation in formations:
        for zealots in range(1, max_zealots + 1):
            ranged, melee, scores = [], [], []
            for repeat in range(repeats):
                result = run_episode(sweep_scenario(base, formation, zealots, repeat, seed), controller)
                ranged.append(result.remaining_ranged)
                melee.append(result.remaining_melee)
                scores.append(episode_fitness(result, ranged_weight))
            rows.append(SweepRow(
                formation=formation.value,
                zealots=zealots,
                repeats=repeats,
                mean_remaining_ranged=float(np.mean(ranged)),
                mean_remaining_melee=float(np.mean(melee)),
                mean_fitness=float(np.mean(scores)),
            ))
        logger.info("sweep %s: 1..%d zealots done", formation.value, max_zealots)
    return rows


def sweep_summary(rows: Sequence[SweepRow]) -> List[dict]:
    """Per-formation averages over every zealot count of a sweep"""
    summary = []
    for formation in dict.fromkeys(r.formation for r in rows):
        chosen = [r for r in rows if r.formation == formation]
        summary.append({
            'formation': formation,
            'mean_remaining_ranged': float(np.mean([r.mean_remaining_ranged for r in chosen])),
            'mean_remaining_melee': float(np.mean([r.mean_remaining_melee for r in chosen])),
            'mean_fitness': float(np.mean([r.mean_fitness for r in chosen])),
            'last_full_kill': max((r.zealots for r in chosen if r.mean_remaining_melee == 0), default=0),
        })
    return summary
