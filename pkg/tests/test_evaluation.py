"""Tests for genome evaluation and the worker pools."""

import os
import socket
import threading

import numpy as np
import pytest

from src.errors import OrchestrationError
from src.logic.evaluation import (
    EvaluationJob, LocalWorkerPool, SocketWorkerPool,
    evaluate_genome, evaluate_population, make_worker_server, play_scenarios,
    recv_message, run_job, send_message,
)
from src.logic.genome import InnovationRegistry, seed_population
from src.logic.scenarios import TrainingSet
from src.models import EvolutionConfig


@pytest.fixture
def genomes():
    config = EvolutionConfig(population_size=4, initial_connection_prob=0.3)
    return seed_population(config, InnovationRegistry(), np.random.default_rng(2))


@pytest.fixture
def worker():
    """A socket worker serving from a background thread."""
    server = make_worker_server("127.0.0.1", 0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server.server_address[:2]
    server.shutdown()
    server.server_close()


def exit_on_key_two(job) -> float:
    """Kills its worker process outright for genome 2; scores everyone else key + 1."""
    if job.genome['key'] == 2:
        os._exit(1)
    return float(job.genome['key'] + 1)


def dead_address():
    """An address nobody listens on."""
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()


class TestEvaluateGenome:
    """Tests for evaluate_genome() and play_scenarios()."""

    def test_sum_over_scenarios(self, genomes, tiny_training_set: TrainingSet) -> None:
        """The total is the sum of the per-scenario fitness values."""
        outcomes = play_scenarios(genomes[0], tiny_training_set)

        assert len(outcomes) == len(tiny_training_set)
        assert evaluate_genome(genomes[0], tiny_training_set) == pytest.approx(sum(o.fitness for o in outcomes))

    def test_deterministic(self, genomes, tiny_training_set: TrainingSet) -> None:
        """The same genome and training set always score the same."""
        assert evaluate_genome(genomes[1], tiny_training_set) == evaluate_genome(genomes[1], tiny_training_set)

    def test_outcome_rows(self, genomes, tiny_training_set: TrainingSet) -> None:
        """Each outcome reports its label, bounds and percentage of the maximum."""
        outcome = play_scenarios(genomes[0], tiny_training_set)[0]

        assert outcome.label == "diagonal, 3 zealots"
        assert outcome.max_fitness == 3 * 100 + 5 * 80
        assert 0.0 <= outcome.percent_of_max <= 100.0
        assert outcome.to_dict()['scenario'] == outcome.label

    def test_job_round_trip(self, genomes, tiny_training_set: TrainingSet) -> None:
        """A plain-data job scores the same as the in-memory genome."""
        job = EvaluationJob.build(genomes[2], tiny_training_set)
        assert run_job(job) == evaluate_genome(genomes[2], tiny_training_set)


class TestLocalWorkerPool:
    """Tests for LocalWorkerPool."""

    def test_serial_results_in_population_order(self, genomes, tiny_training_set) -> None:
        """Results line up with the genomes they belong to."""
        with LocalWorkerPool(workers=1) as pool:
            results = pool.evaluate(genomes, tiny_training_set)

        assert results == [evaluate_genome(g, tiny_training_set) for g in genomes]

    def test_parallel_matches_serial(self, genomes, tiny_training_set) -> None:
        """A process pool gives exactly the serial results."""
        with LocalWorkerPool(workers=2) as pool:
            parallel = pool.evaluate(genomes, tiny_training_set)
        with LocalWorkerPool(workers=1) as pool:
            serial = pool.evaluate(genomes, tiny_training_set)

        assert parallel == serial

    def test_failed_job_is_retried(self, genomes, tiny_training_set) -> None:
        """A job that fails once succeeds on its second attempt."""
        calls = []

        def flaky(job):
            calls.append(job.genome['key'])
            if len(calls) == 1:
                raise RuntimeError("worker hiccup")
            return 7.0

        pool = LocalWorkerPool(workers=1, retries=3, runner=flaky)
        assert pool.evaluate(genomes[:1], tiny_training_set) == [7.0]
        assert len(calls) == 2

    def test_exhausted_retries_score_zero(self, genomes, tiny_training_set) -> None:
        """A genome that keeps failing is scored 0 after the allowed attempts."""
        calls = []

        def broken(job):
            calls.append(1)
            raise RuntimeError("always fails")

        pool = LocalWorkerPool(workers=1, retries=3, runner=broken)
        assert pool.evaluate(genomes[:2], tiny_training_set) == [0.0, 0.0]
        assert len(calls) == 6

    def test_killed_worker_charges_only_its_genome(self, genomes, tiny_training_set) -> None:
        """A worker that dies takes down only the genome that killed it; the rest keep their scores."""
        with LocalWorkerPool(workers=2, retries=3, runner=exit_on_key_two) as pool:
            results = pool.evaluate(genomes, tiny_training_set)

        assert [g.key for g in genomes] == [0, 1, 2, 3]
        assert results == [1.0, 2.0, 0.0, 4.0]

    def test_pool_recovers_after_a_killed_worker(self, genomes, tiny_training_set) -> None:
        """The next evaluate() call after a crash runs on a rebuilt pool."""
        with LocalWorkerPool(workers=2, retries=2, runner=exit_on_key_two) as pool:
            pool.evaluate(genomes, tiny_training_set)
            again = pool.evaluate([genomes[0], genomes[3]], tiny_training_set)

        assert again == [1.0, 4.0]

    def test_evaluate_population_stores_fitness(self, genomes, tiny_training_set) -> None:
        """evaluate_population() writes each result onto its genome."""
        fitnesses = evaluate_population(genomes, tiny_training_set, LocalWorkerPool())
        assert [g.fitness for g in genomes] == fitnesses


class TestSocketWorkerPool:
    """Tests for the socket worker and SocketWorkerPool."""

    def test_matches_local_evaluation(self, worker, genomes, tiny_training_set) -> None:
        """Remote results are identical to in-process ones."""
        remote = SocketWorkerPool([worker]).evaluate(genomes, tiny_training_set)
        local = LocalWorkerPool().evaluate(genomes, tiny_training_set)

        assert remote == local

    def test_dead_worker_is_skipped(self, worker, genomes, tiny_training_set) -> None:
        """Genomes are re-dispatched to the workers that are still reachable."""
        pool = SocketWorkerPool([dead_address(), worker], timeout=5.0)
        results = pool.evaluate(genomes, tiny_training_set)

        assert results == LocalWorkerPool().evaluate(genomes, tiny_training_set)
        assert pool.alive == [tuple(worker)]

    def test_all_workers_unreachable(self, genomes, tiny_training_set) -> None:
        """With nobody to talk to the pool raises OrchestrationError."""
        pool = SocketWorkerPool([dead_address()], timeout=2.0)
        with pytest.raises(OrchestrationError):
            pool.evaluate(genomes, tiny_training_set)

    def test_pool_needs_addresses(self) -> None:
        """An empty address list is rejected."""
        with pytest.raises(OrchestrationError):
            SocketWorkerPool([])

    def test_unknown_message_gets_error_reply(self, worker) -> None:
        """The worker answers unknown requests with an ERROR message."""
        with socket.create_connection(worker, timeout=5.0) as sock:
            send_message(sock, {'type': 'PING', 'id': 3})
            reply = recv_message(sock)

        assert reply['type'] == 'ERROR'
        assert reply['id'] == 3

    def test_bad_eval_gets_error_reply(self, worker) -> None:
        """An EVAL for scenarios that were never sent fails with ERROR, not a crash."""
        with socket.create_connection(worker, timeout=5.0) as sock:
            send_message(sock, {'type': 'EVAL', 'id': 1, 'genome': {}, 'scenario_ids': [0]})
            reply = recv_message(sock)

        assert reply['type'] == 'ERROR'
        assert reply['id'] == 1
        assert reply['message']

    def test_shutdown_stops_the_worker(self, genomes, tiny_training_set) -> None:
        """A SHUTDOWN message ends serve_forever()."""
        server = make_worker_server("127.0.0.1", 0)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        pool = SocketWorkerPool([server.server_address[:2]], timeout=5.0)
        pool.evaluate(genomes[:1], tiny_training_set)
        pool.shutdown_workers()
        thread.join(timeout=10.0)
        server.server_close()

        assert not thread.is_alive()


@pytest.mark.slow
class TestWorkerCountEquivalence:
    """Fitness vectors do not depend on how many processes evaluate them."""

    def test_one_and_four_workers_agree(self, tiny_training_set) -> None:
        """50 random genomes score identically with 1 and 4 local workers."""
        config = EvolutionConfig(population_size=50, initial_connection_prob=0.5)
        population = seed_population(config, InnovationRegistry(), np.random.default_rng(11))

        with LocalWorkerPool(workers=1) as pool:
            serial = pool.evaluate(population, tiny_training_set)
        with LocalWorkerPool(workers=4) as pool:
            parallel = pool.evaluate(population, tiny_training_set)

        assert parallel == serial
