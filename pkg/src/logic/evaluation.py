"""
Fitness evaluation for MicroNEAT
Episode fitness, multi-scenario genome evaluation and the worker pools that run it
"""
import json
import logging
import queue
import socket
import socketserver
import struct
import threading
from abc import ABC, abstractmethod
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor, as_completed
from concurrent.futures.process import BrokenProcessPool
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

from ..errors import OrchestrationError
from ..models import EpisodeResult, FitnessInputs, Scenario
from .combat import run_episode
from .genome import Genome
from .network import GenomeController

logger = logging.getLogger(__name__)

DEFAULT_RETRIES = 3


# === FITNESS ===

def fitness(inputs: FitnessInputs, ranged_weight: float = 1.0) -> float:
    """F = Nz*Hzmax + w*sum(Hh) - sum(Hz); never negative since each Hz <= Hzmax"""
    return inputs.nz * inputs.hz_max + ranged_weight * sum(inputs.hh) - sum(inputs.hz)


def episode_fitness(result: EpisodeResult, ranged_weight: float = 1.0) -> float:
    return fitness(result.fitness_inputs(), ranged_weight)


@dataclass
class ScenarioOutcome:
    """Per-scenario row of an evaluation"""
    label: str
    fitness: float
    max_fitness: float
    remaining_ranged: int
    remaining_melee: int
    frames: int

    @property
    def percent_of_max(self) -> float:
        return 100.0 * self.fitness / self.max_fitness if self.max_fitness else 0.0

    def to_dict(self) -> dict:
        return {
            'scenario': self.label,
            'fitness': self.fitness,
            'max_fitness': self.max_fitness,
            'percent_of_max': self.percent_of_max,
            'remaining_ranged': self.remaining_ranged,
            'remaining_melee': self.remaining_melee,
            'frames': self.frames,
        }


def play_scenarios(genome: Genome, scenarios: Sequence[Scenario],
                   ranged_weight: float = 1.0) -> List[ScenarioOutcome]:
    controller = GenomeController(genome)
    outcomes = []
    for scenario in scenarios:
        result = run_episode(scenario, controller)
        outcomes.append(ScenarioOutcome(
            label=scenario.label,
            fitness=episode_fitness(result, ranged_weight),
            max_fitness=scenario.max_fitness,
            remaining_ranged=result.remaining_ranged,
            remaining_melee=result.remaining_melee,
            frames=result.frames,
        ))
    return outcomes


def evaluate_genome(genome: Genome, training_set: Sequence[Scenario], ranged_weight: float = 1.0) -> float:
    """Sum of episode fitness over every scenario of the training set"""
    return sum(o.fitness for o in play_scenarios(genome, training_set, ranged_weight))


# === JOBS ===

@dataclass
class EvaluationJob:
    """Plain-data unit of work, safe to pickle or send over a socket"""
    genome: dict
    scenarios: List[dict]
    ranged_weight: float = 1.0

    @classmethod
    def build(cls, genome: Genome, training_set: Sequence[Scenario], ranged_weight: float = 1.0) -> 'EvaluationJob':
        return cls(genome.to_dict(), [s.to_dict() for s in training_set], ranged_weight)


def run_job(job: EvaluationJob) -> float:
    genome = Genome.from_dict(job.genome)
    scenarios = [Scenario.from_dict(s) for s in job.scenarios]
    return evaluate_genome(genome, scenarios, job.ranged_weight)


JobRunner = Callable[[EvaluationJob], float]


# === WORKER POOLS ===

class WorkerPool(ABC):
    """Evaluates a batch of genomes; results come back in population order"""

    @abstractmethod
    def evaluate(self, genomes: Sequence[Genome], training_set: Sequence[Scenario],
                 ranged_weight: float = 1.0) -> List[float]:
        ...

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def _give_up(genome: Genome, error: BaseException, attempts: int) -> float:
    logger.warning("genome %d failed %d evaluation attempts, scoring 0: %s", genome.key, attempts, error)
    return 0.0


class LocalWorkerPool(WorkerPool):
    """
    In-process evaluation: serial for one worker, a process pool otherwise.

    A genome whose job raises is re-dispatched up to `retries` attempts in total;
    when a worker process dies the pool is rebuilt and the jobs it was holding run
    one at a time in fresh single-worker pools, so only the genome that kills its
    own worker is charged an attempt.
    """

    def __init__(self, workers: int = 1, retries: int = DEFAULT_RETRIES, runner: JobRunner = run_job):
        self.workers = max(1, int(workers))
        self.retries = max(1, int(retries))
        self.runner = runner
        self._executor: Optional[ProcessPoolExecutor] = None

    def evaluate(self, genomes, training_set, ranged_weight=1.0):
        jobs = [EvaluationJob.build(g, training_set, ranged_weight) for g in genomes]
        if self.workers == 1:
            return [self._evaluate_serial(g, job) for g, job in zip(genomes, jobs)]
        return self._evaluate_parallel(genomes, jobs)

    def _evaluate_serial(self, genome: Genome, job: EvaluationJob) -> float:
        error = None
        for _ in range(self.retries):
            try:
                return float(self.runner(job))
            except Exception as e:
                error = e
                logger.debug("genome %d evaluation failed: %s", genome.key, e)
        return _give_up(genome, error, self.retries)

    def _evaluate_parallel(self, genomes, jobs) -> List[float]:
        results: List[Optional[float]] = [None] * len(jobs)
        attempts = [0] * len(jobs)
        pending = list(range(len(jobs)))
        while pending:
            if self._executor is None:
                self._executor = ProcessPoolExecutor(max_workers=self.workers)
            futures = {self._executor.submit(self.runner, jobs[i]): i for i in pending}
            pending, orphaned = [], []
            for future in as_completed(futures):
                index = futures[future]
                try:
                    results[index] = float(future.result())
                    continue
                except BrokenProcessPool:
                    # any in-flight job fails with a broken pool, not only the one that killed it
                    orphaned.append(index)
                    continue
                except Exception as e:
                    error = e
                attempts[index] += 1
                if attempts[index] >= self.retries:
                    results[index] = _give_up(genomes[index], error, attempts[index])
                else:
                    pending.append(index)
            if orphaned:
                logger.warning("worker process died, re-running %d genomes one at a time", len(orphaned))
                self._shutdown()
                for index in sorted(orphaned):
                    results[index] = self._evaluate_isolated(genomes[index], jobs[index], attempts[index])
            pending.sort()
        return results

    def _evaluate_isolated(self, genome: Genome, job: EvaluationJob, attempts: int) -> float:
        """Run one job in its own single-process pool so a crash is charged to it alone"""
        error = None
        while attempts < self.retries:
            with ProcessPoolExecutor(max_workers=1) as executor:
                try:
                    return float(executor.submit(self.runner, job).result())
                except Exception as e:
                    error = e
            attempts += 1
            logger.debug("genome %d failed in isolation: %s", genome.key, error)
        return _give_up(genome, error, attempts)

    def _shutdown(self):
        if self._executor is not None:
            self._executor.shutdown(wait=True, cancel_futures=True)
            self._executor = None

    def close(self):
        self._shutdown()


# === SOCKET TRANSPORT ===

_HEADER = struct.Struct('>I')


def send_message(sock: socket.socket, message: dict):
    """One length-prefixed JSON message"""
    payload = json.dumps(message).encode('utf-8')
    sock.sendall(_HEADER.pack(len(payload)) + payload)


def _recv_exact(sock: socket.socket, size: int) -> Optional[bytes]:
    chunks = []
    while size:
        chunk = sock.recv(size)
        if not chunk:
            return None
        chunks.append(chunk)
        size -= len(chunk)
    return b''.join(chunks)


def recv_message(sock: socket.socket) -> Optional[dict]:
    """Next message, or None once the peer has closed the connection"""
    header = _recv_exact(sock, _HEADER.size)
    if header is None:
        return None
    payload = _recv_exact(sock, _HEADER.unpack(header)[0])
    if payload is None:
        raise ConnectionError("connection closed mid-message")
    return json.loads(payload.decode('utf-8'))


class _WorkerHandler(socketserver.BaseRequestHandler):
    """Serves SCENARIOS / EVAL / SHUTDOWN messages on one connection"""

    def handle(self):
        scenarios: List[Scenario] = []
        ranged_weight = 1.0
        while True:
            message = recv_message(self.request)
            if message is None:
                return
            kind = message.get('type')
            if kind == 'SCENARIOS':
                scenarios = [Scenario.from_dict(s) for s in message['scenarios']]
                ranged_weight = float(message.get('ranged_weight', 1.0))
            elif kind == 'EVAL':
                try:
                    genome = Genome.from_dict(message['genome'])
                    chosen = [scenarios[i] for i in message['scenario_ids']]
                    value = evaluate_genome(genome, chosen, ranged_weight)
                    send_message(self.request, {'type': 'RESULT', 'id': message['id'], 'fitness': value})
                except Exception as e:
                    send_message(self.request, {'type': 'ERROR', 'id': message.get('id'), 'message': str(e)})
            elif kind == 'SHUTDOWN':
                threading.Thread(target=self.server.shutdown, daemon=True).start()
                return
            else:
                send_message(self.request, {'type': 'ERROR', 'id': message.get('id'),
                                            'message': f"unknown message type {kind!r}"})


class WorkerServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


def make_worker_server(host: str = "127.0.0.1", port: int = 0) -> WorkerServer:
    """Bound (not yet serving) worker; port 0 picks a free port"""
    return WorkerServer((host, port), _WorkerHandler)


def serve_worker(host: str, port: int):
    with make_worker_server(host, port) as server:
        logger.info("worker listening on %s:%d", *server.server_address[:2])
        server.serve_forever()


@dataclass
class _SocketRound:
    work: "queue.Queue[int]"
    results: List[Optional[float]]
    attempts: List[int]
    lock: threading.Lock = field(default_factory=threading.Lock)


class SocketWorkerPool(WorkerPool):
    """Dispatches EVAL requests to remote workers, one connection per worker"""

    def __init__(self, addresses: Sequence[Tuple[str, int]], retries: int = DEFAULT_RETRIES,
                 timeout: Optional[float] = None):
        if not addresses:
            raise OrchestrationError("socket pool needs at least one worker address")
        self.addresses = [(str(h), int(p)) for h, p in addresses]
        self.retries = max(1, int(retries))
        self.timeout = timeout
        self.alive = list(self.addresses)

    def evaluate(self, genomes, training_set, ranged_weight=1.0):
        table = {
            'type': 'SCENARIOS',
            'scenarios': [s.to_dict() for s in training_set],
            'ranged_weight': ranged_weight,
        }
        scenario_ids = list(range(len(training_set)))
        state = _SocketRound(queue.Queue(), [None] * len(genomes), [0] * len(genomes))
        remaining = list(range(len(genomes)))

        while remaining:
            if not self.alive:
                raise OrchestrationError(f"all {len(self.addresses)} workers are unreachable")
            state.work = queue.Queue()
            for index in remaining:
                state.work.put(index)
            with ThreadPoolExecutor(max_workers=len(self.alive)) as executor:
                outcomes = list(executor.map(
                    lambda address: self._drive(address, table, genomes, scenario_ids, state),
                    list(self.alive)))
            self.alive = [a for a, ok in zip(list(self.alive), outcomes) if ok]
            remaining = [i for i, r in enumerate(state.results) if r is None]
        return state.results

    def _fail(self, state: _SocketRound, genome: Genome, index: int, error) -> bool:
        """Count a failed attempt; True when the genome should be re-dispatched"""
        with state.lock:
            state.attempts[index] += 1
            if state.attempts[index] >= self.retries:
                state.results[index] = _give_up(genome, error, state.attempts[index])
                return False
        return True

    def _drive(self, address, table, genomes, scenario_ids, state: _SocketRound) -> bool:
        """Feed one worker until the queue is empty; False when the worker dropped out"""
        index = None
        try:
            with socket.create_connection(address, timeout=self.timeout) as sock:
                send_message(sock, table)
                while True:
                    try:
                        index = state.work.get_nowait()
                    except queue.Empty:
                        return True
                    send_message(sock, {
                        'type': 'EVAL',
                        'id': index,
                        'genome': genomes[index].to_dict(),
                        'scenario_ids': scenario_ids,
                    })
                    reply = recv_message(sock)
                    if reply is None:
                        raise ConnectionError("worker closed the connection")
                    if reply.get('type') == 'RESULT':
                        state.results[index] = float(reply['fitness'])
                    elif self._fail(state, genomes[index], index, reply.get('message')):
                        state.work.put(index)
                    index = None
        except (OSError, ValueError) as e:
            logger.warning("worker %s:%d lost: %s", address[0], address[1], e)
            if index is not None and self._fail(state, genomes[index], index, e):
                state.work.put(index)
            return False

    def shutdown_workers(self):
        """Ask every reachable worker process to stop serving"""
        for address in self.alive:
            try:
                with socket.create_connection(address, timeout=self.timeout) as sock:
                    send_message(sock, {'type': 'SHUTDOWN'})
            except OSError as e:
                logger.debug("worker %s:%d already gone: %s", address[0], address[1], e)


def evaluate_population(population: Sequence[Genome], training_set: Sequence[Scenario],
                        worker_pool: WorkerPool, ranged_weight: float = 1.0) -> List[float]:
    """Evaluate every genome once and store the result on genome.fitness"""
    fitnesses = worker_pool.evaluate(population, training_set, ranged_weight)
    for genome, value in zip(population, fitnesses):
        genome.fitness = value
    return fitnesses
