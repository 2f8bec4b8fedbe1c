"""
MicroNEAT
Command-line entry point: training, evaluation, generalization sweeps,
replays, scripted baselines, socket workers and PDF reports
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

sys.path.insert(0, str(Path(__file__).parent))

from src import (
    __version__, ConfigError, Formation, MicroNeatError, RunManifest, Scenario, exit_code_for, load_config, now_str,
)
from src.config import RunConfig
from src.errors import EXIT_OK
from src.logic import (
    GenomeController, LocalWorkerPool, SocketWorkerPool, analyze_replay, generalization_sweep,
    make_policy, parse_scenario_spec, run_episode, serve_worker, POLICIES,
)
from src.logic.evaluation import episode_fitness, play_scenarios
from src.logic.scenarios import SWEEP_FORMATIONS
from src.logic.trainer import SWEEP_HEADER, Trainer, sweep_summary
from src.storage import (
    RunStore, load_genome, read_replay, sha256_file, write_csv, write_json, write_replay,
)

try:
    from src.utils import generate_run_report, REPORTLAB_AVAILABLE
except ImportError:
    REPORTLAB_AVAILABLE = False

logger = logging.getLogger("microneat")


# === HELPERS ===

def _ok(message: str):
    print(f"✓ {message}")


def _fail(message: str):
    print(f"✗ {message}", file=sys.stderr)


def _setup_logging(verbose: bool):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def _positions(text: Optional[str]) -> Optional[List[int]]:
    """'1,3' -> [1, 3]"""
    if not text:
        return None
    try:
        return [int(part) for part in text.split(',') if part.strip()]
    except ValueError:
        raise ConfigError(f"--scenarios expects comma-separated positions, got '{text}'") from None


def _formations(text: Optional[str]) -> Sequence[Formation]:
    if not text:
        return SWEEP_FORMATIONS
    chosen = []
    for name in text.split(','):
        try:
            chosen.append(Formation(name.strip().lower()))
        except ValueError:
            valid = ", ".join(f.value for f in Formation)
            raise ConfigError(f"unknown formation '{name}' (expected one of: {valid})") from None
    return chosen


def _addresses(text: str) -> List[Tuple[str, int]]:
    addresses = []
    for item in text.split(','):
        host, _, port = item.strip().rpartition(':')
        if not host or not port.isdigit():
            raise ConfigError(f"worker address must be host:port, got '{item}'")
        addresses.append((host, int(port)))
    return addresses


def _config(args) -> RunConfig:
    config = load_config(getattr(args, 'config', None))
    return config.with_overrides(
        seed=getattr(args, 'seed', None),
        workers=getattr(args, 'workers', None),
        generations=getattr(args, 'generations', None),
        ranged_type=getattr(args, 'ranged_type', None),
        scenarios=_positions(getattr(args, 'scenarios', None)),
    )


def _manifest(args, output_dir: Path, config: Optional[RunConfig] = None, seed=None) -> RunManifest:
    return RunManifest(
        command=args.command,
        output_dir=str(output_dir),
        config_path=getattr(args, 'config', None) or "",
        seed=seed if seed is not None else (config.evolution.seed if config else None),
        config_hash=config.config_hash if config else "",
        arguments=list(args.argv),
    )


def _sidecar_manifest(path: Path, manifest: RunManifest, artifacts: Sequence[Path]):
    """Manifest next to a single-file output: <name>.manifest.json"""
    for artifact in artifacts:
        manifest.artifacts[artifact.name] = sha256_file(artifact)
    manifest.status = "ok"
    manifest.finished = now_str()
    write_json(path.with_name(path.stem + ".manifest.json"), manifest.to_dict())


# === COMMANDS ===

def cmd_train(args) -> int:
    config = _config(args)
    out_dir = Path(args.out)
    store = RunStore(out_dir)
    manifest = _manifest(args, out_dir, config)
    if args.resume and store.manifest_path.exists():
        previous = store.load_manifest()
        manifest.started = previous.started
    store.start(manifest)
    write_json(out_dir / "config.json", config.to_dict())

    if args.connect:
        pool = SocketWorkerPool(_addresses(args.connect), retries=config.run.retries)
    else:
        pool = LocalWorkerPool(config.run.workers, retries=config.run.retries)

    def progress(stats):
        print(f"  gen {stats.generation:4d}  best {stats.best:9.1f}  mean {stats.mean:9.1f}  "
              f"species {stats.species:3d}  ({stats.percent_of_max:5.1f}% of max)")

    trainer = Trainer(config.evolution, config.training_set, pool, store,
                      checkpoint_every=config.run.checkpoint_every,
                      config_hash=config.config_hash, on_generation=progress)
    print(f"Training {config.evolution.population_size} genomes for {config.evolution.generations} "
          f"generations on {len(config.training_set)} scenarios (max fitness {config.training_set.max_fitness:g})")
    try:
        with pool:
            result = trainer.run(resume=args.resume)
    except KeyboardInterrupt:
        store.finish("interrupted")
        raise
    except MicroNeatError:
        store.finish("failed")
        raise

    for path in (out_dir / "config.json", store.stats_path, store.best_genome_path):
        if path.exists():
            store.record(path)
    latest = store.latest_checkpoint()
    if latest is not None:
        store.record(latest)
    store.finish("ok")
    _ok(f"Best fitness {result.best_fitness:g} ({result.percent_of_max:.1f}% of max) "
        f"found in generation {result.best_generation}")
    _ok(f"Artifacts written to {out_dir}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    config = _config(args)
    genome, metadata = load_genome(args.genome)
    scenarios = config.training_set.for_generation(config.evolution.seed, 0)
    outcomes = play_scenarios(genome, scenarios, config.evolution.ranged_hp_weight)

    width = max(len(o.label) for o in outcomes)
    print(f"{'scenario':<{width}}  {'fitness':>9}  {'max':>7}  {'%':>6}  ranged  melee")
    for o in outcomes:
        print(f"{o.label:<{width}}  {o.fitness:9.1f}  {o.max_fitness:7.0f}  {o.percent_of_max:6.1f}  "
              f"{o.remaining_ranged:6d}  {o.remaining_melee:5d}")
    total = sum(o.fitness for o in outcomes)
    maximum = scenarios.max_fitness
    print(f"{'total':<{width}}  {total:9.1f}  {maximum:7.0f}  {100.0 * total / maximum:6.1f}")

    if args.out:
        out = Path(args.out)
        write_json(out, {
            'genome': str(args.genome),
            'genome_config_hash': metadata.get('config_hash', ''),
            'total_fitness': total,
            'max_fitness': maximum,
            'scenarios': [o.to_dict() for o in outcomes],
        })
        _sidecar_manifest(out, _manifest(args, out.parent, config), [out])
        _ok(f"Evaluation written to {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _config(args)
    genome, _ = load_genome(args.genome)
    formations = _formations(args.formations)
    base = config.simulation.base_scenario()
    rows = generalization_sweep(genome, formations, args.max_zealots, args.repeats, base,
                                seed=config.evolution.seed,
                                ranged_weight=config.evolution.ranged_hp_weight)
    out = Path(args.out)
    write_csv(out, SWEEP_HEADER, (r.row() for r in rows))
    _sidecar_manifest(out, _manifest(args, out.parent, config), [out])

    for item in sweep_summary(rows):
        print(f"  {item['formation']:<22} ranged left {item['mean_remaining_ranged']:5.2f}  "
              f"melee left {item['mean_remaining_melee']:6.2f}  "
              f"annihilates up to {item['last_full_kill']} zealots")
    _ok(f"{len(rows)} sweep rows written to {out}")
    return EXIT_OK


def _replay_controller(args):
    if args.genome:
        genome, _ = load_genome(args.genome)
        return GenomeController(genome), f"genome {genome.key}"
    return make_policy(args.policy, args.seed or 0), f"policy {args.policy}"


def cmd_replay(args) -> int:
    config = _config(args)
    if not args.genome and not args.policy:
        raise ConfigError("replay needs --genome or --policy")
    controller, source = _replay_controller(args)
    scenario = parse_scenario_spec(args.scenario, config.simulation.base_scenario())
    scenario = scenario.with_seed(args.seed or 0)
    result = run_episode(scenario, controller, record=True)

    out = Path(args.out)
    header = {'scenario': scenario.to_dict(), 'controller': source, 'summary': result.summary()}
    write_replay(out, header, result.replay)
    _sidecar_manifest(out, _manifest(args, out.parent, config, seed=scenario.spawn_seed), [out])

    report = analyze_replay(result.replay, scenario.ranged_stats.attack_range, scenario.melee_stats.attack_range)
    print(f"  {result.frames} frames, {result.remaining_ranged} ranged / {result.remaining_melee} melee left, "
          f"fitness {episode_fitness(result, config.evolution.ranged_hp_weight):g}")
    print(f"  {report.fire_events} shots, fire/retreat alternation {report.alternation_rate:.2f}")
    _ok(f"Replay written to {out}")
    return EXIT_OK


def cmd_baseline(args) -> int:
    config = _config(args)
    scenario = parse_scenario_spec(args.scenario, config.simulation.base_scenario())
    scenario = scenario.with_seed(args.seed or 0)
    policies = POLICIES if args.policy == "all" else (args.policy,)

    results = []
    for name in policies:
        result = run_episode(scenario, make_policy(name, args.seed or 0))
        value = episode_fitness(result, config.evolution.ranged_hp_weight)
        results.append({'policy': name, 'fitness': value, 'max_fitness': scenario.max_fitness,
                        **result.summary()})
        print(f"  {name:<16} fitness {value:8.1f} / {scenario.max_fitness:g}  "
              f"({result.remaining_ranged} ranged, {result.remaining_melee} melee left, {result.frames} frames)")

    if args.out:
        out = Path(args.out)
        write_json(out, {'scenario': scenario.to_dict(), 'results': results})
        _sidecar_manifest(out, _manifest(args, out.parent, config, seed=scenario.spawn_seed), [out])
        _ok(f"Baseline report written to {out}")
    return EXIT_OK


def cmd_worker(args) -> int:
    print(f"Worker listening on {args.host}:{args.port} (Ctrl+C to stop)")
    serve_worker(args.host, args.port)
    return EXIT_OK


def cmd_report(args) -> int:
    if not REPORTLAB_AVAILABLE:
        _fail("reportlab not installed. Run: pip install reportlab")
        return EXIT_OK
    path = generate_run_report(args.run, args.sweep, args.out)
    _ok(f"Report written to {path}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    header, records = read_replay(args.replay)
    scenario = Scenario.from_dict(header.get('scenario', {}))
    report = analyze_replay(records, scenario.ranged_stats.attack_range, scenario.melee_stats.attack_range)
    print(json.dumps({'scenario': scenario.formation.value, **report.to_dict()}, indent=2))
    return EXIT_OK


COMMANDS = {
    'train': cmd_train,
    'evaluate': cmd_evaluate,
    'sweep': cmd_sweep,
    'replay': cmd_replay,
    'baseline': cmd_baseline,
    'worker': cmd_worker,
    'report': cmd_report,
    'analyze': cmd_analyze,
}


# === PARSER ===

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="microneat", description="Evolve kiting controllers with NEAT")
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    parser.add_argument('-v', '--verbose', action='store_true', help="debug logging")
    sub = parser.add_subparsers(dest='command', required=True)

    def common(p, seed=True):
        p.add_argument('--config', help="JSON run config (default: built-in preset)")
        p.add_argument('--ranged-type', help="ranged unit preset (vulture, hellion)")
        if seed:
            p.add_argument('--seed', type=int, help="override the run seed")

    p = sub.add_parser('train', help="evolve a population")
    common(p)
    p.add_argument('--out', required=True, help="output directory")
    p.add_argument('--workers', type=int, help="local evaluation processes")
    p.add_argument('--connect', help="socket workers as host:port[,host:port...]")
    p.add_argument('--generations', type=int, help="override the generation count")
    p.add_argument('--scenarios', help="1-based training set positions, e.g. 1,3")
    p.add_argument('--resume', action='store_true', help="continue from the latest checkpoint")

    p = sub.add_parser('evaluate', help="score a genome on the training set")
    common(p)
    p.add_argument('--genome', required=True)
    p.add_argument('--scenarios', help="1-based training set positions, e.g. 1,3")
    p.add_argument('--out', help="optional JSON result file")

    p = sub.add_parser('sweep', help="generalization sweep over formations and zealot counts")
    common(p)
    p.add_argument('--genome', required=True)
    p.add_argument('--out', required=True, help="CSV output file")
    p.add_argument('--formations', help="comma-separated formations (default: six sweep formations)")
    p.add_argument('--max-zealots', type=int, default=30)
    p.add_argument('--repeats', type=int, default=10)

    p = sub.add_parser('replay', help="record one episode as JSON Lines")
    common(p)
    p.add_argument('--genome')
    p.add_argument('--policy', choices=POLICIES)
    p.add_argument('--scenario', default="diagonal:25", help="formation:zealots")
    p.add_argument('--out', required=True)

    p = sub.add_parser('baseline', help="run scripted controllers through the episode pipeline")
    common(p)
    p.add_argument('--policy', default="all", choices=POLICIES + ("all",))
    p.add_argument('--scenario', default="diagonal:25", help="formation:zealots")
    p.add_argument('--out', help="optional JSON report")

    p = sub.add_parser('worker', help="serve evaluations over a socket")
    p.add_argument('--host', default="127.0.0.1")
    p.add_argument('--port', type=int, default=5555)

    p = sub.add_parser('report', help="render a run directory into a PDF")
    p.add_argument('--run', required=True)
    p.add_argument('--sweep', help="sweep CSV to include")
    p.add_argument('--out', help="PDF path (default: <run>/report.pdf)")

    p = sub.add_parser('analyze', help="kiting statistics of a replay file")
    p.add_argument('--replay', required=True)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    _setup_logging(args.verbose)

    try:
        return COMMANDS[args.command](args)
    except KeyboardInterrupt as e:
        _fail("Interrupted; the latest checkpoint can be resumed with --resume")
        return exit_code_for(e)
    except ConfigError as e:
        _fail(str(e))
        return exit_code_for(e)
    except OSError as e:
        _fail(f"I/O error: {e}")
        return exit_code_for(e)
    except MicroNeatError as e:
        logger.debug("command %s failed", args.command, exc_info=True)
        _fail(f"{type(e).__name__}: {e}")
        return exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())
