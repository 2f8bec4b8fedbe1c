"""
MicroNEAT - Logic Module
Combat simulation, sensors, NEAT engine, evaluation and training
"""
from .combat import advance, run_episode, step, zealot_ai
from .sensors import decode, encode, encode_action, encode_all, SensorVector
from .genome import (
    Genome, ConnectionGene, NodeGene, InnovationRegistry,
    seed_population, mutate, crossover, compatibility_distance
)
from .network import Network, GenomeController, activate
from .speciation import Species, SpeciesSet, speciate, next_generation
from .scenarios import TrainingSet, spawn, derive_seed, parse_scenario_spec
from .evaluation import (
    fitness, evaluate_genome, evaluate_population,
    WorkerPool, LocalWorkerPool, SocketWorkerPool, serve_worker
)
from .trainer import Trainer, train, generalization_sweep, GenerationStats
from .baselines import make_policy, analyze_replay, POLICIES

__all__ = [
    # Simulation
    'advance', 'run_episode', 'step', 'zealot_ai',
    'decode', 'encode', 'encode_action', 'encode_all', 'SensorVector',

    # NEAT
    'Genome', 'ConnectionGene', 'NodeGene', 'InnovationRegistry',
    'seed_population', 'mutate', 'crossover', 'compatibility_distance',
    'Network', 'GenomeController', 'activate',
    'Species', 'SpeciesSet', 'speciate', 'next_generation',

    # Orchestration
    'TrainingSet', 'spawn', 'derive_seed', 'parse_scenario_spec',
    'fitness', 'evaluate_genome', 'evaluate_population',
    'WorkerPool', 'LocalWorkerPool', 'SocketWorkerPool', 'serve_worker',
    'Trainer', 'train', 'generalization_sweep', 'GenerationStats',

    # Baselines
    'make_policy', 'analyze_replay', 'POLICIES',
]
