"""
Storage for MicroNEAT
Versioned JSON documents (genomes, checkpoints, manifests), CSV tables and replay logs,
all written through a temp file and an atomic replace
"""
import csv
import hashlib
import io
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .errors import ConfigError, GenomeSchemaError
from .logic.genome import Genome
from .models import ReplayRecord, RunManifest, now_str, NUM_INPUTS, NUM_OUTPUTS

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

GENOME_SCHEMA = "microneat.genome"
GENOME_SCHEMA_VERSION = 1
CHECKPOINT_SCHEMA = "microneat.checkpoint"
CHECKPOINT_SCHEMA_VERSION = 1
REPLAY_SCHEMA = "microneat.replay"
REPLAY_SCHEMA_VERSION = 1

MANIFEST_FILE = "manifest.json"
BEST_GENOME_FILE = "best_genome.json"
STATS_FILE = "stats.csv"
CHECKPOINT_DIR = "checkpoints"


# === LOW LEVEL ===

def _write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    temp_path = path.with_name(path.name + '.tmp')
    with open(temp_path, 'w', encoding='utf-8', newline='') as f:
        f.write(text)
    temp_path.replace(path)


def write_json(path: PathLike, data: Any):
    _write_atomic(Path(path), json.dumps(data, indent=2, ensure_ascii=False) + "\n")


def read_json(path: PathLike) -> Any:
    """Parsed JSON; syntax errors become ConfigError anchored to the offending line"""
    path = Path(path)
    with open(path, 'r', encoding='utf-8') as f:
        text = f.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e.msg}", path=str(path), line=e.lineno) from None


def sha256_file(path: PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(65536), b''):
            digest.update(chunk)
    return digest.hexdigest()


def canonical_hash(data: Any) -> str:
    """SHA-256 of the sorted-key JSON form"""
    text = json.dumps(data, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    _write_atomic(Path(path), buffer.getvalue())


def read_csv(path: PathLike) -> List[Dict[str, str]]:
    with open(path, 'r', encoding='utf-8', newline='') as f:
        return list(csv.DictReader(f))


# === GENOMES ===

def genome_document(genome: Genome, config_hash: str = "", generation: Optional[int] = None,
                    extra: Optional[dict] = None) -> dict:
    metadata = {
        'config_hash': config_hash,
        'generation': generation,
        'fitness': genome.fitness,
        'saved': now_str(),
    }
    metadata.update(extra or {})
    return {
        'schema': GENOME_SCHEMA,
        'version': GENOME_SCHEMA_VERSION,
        'inputs': NUM_INPUTS,
        'outputs': NUM_OUTPUTS,
        'metadata': metadata,
        'genome': genome.to_dict(),
    }


def genome_from_document(data: Any, source: str = "<genome>") -> Tuple[Genome, dict]:
    """(genome, metadata) of a genome document; raises GenomeSchemaError when incompatible"""
    if not isinstance(data, dict) or data.get('schema') != GENOME_SCHEMA:
        raise GenomeSchemaError(f"not a {GENOME_SCHEMA} document", path=source)
    if data.get('version') != GENOME_SCHEMA_VERSION:
        raise GenomeSchemaError(
            f"unsupported genome schema version {data.get('version')} "
            f"(this build reads {GENOME_SCHEMA_VERSION})", path=source)
    if data.get('inputs') != NUM_INPUTS or data.get('outputs') != NUM_OUTPUTS:
        raise GenomeSchemaError(
            f"genome has {data.get('inputs')} inputs / {data.get('outputs')} outputs, "
            f"expected {NUM_INPUTS} / {NUM_OUTPUTS}", path=source)
    try:
        genome = Genome.from_dict(data['genome'])
    except (KeyError, TypeError, ValueError) as e:
        raise GenomeSchemaError(f"malformed genome: {e}", path=source) from None
    problems = genome.problems()
    if problems:
        raise GenomeSchemaError("; ".join(problems), path=source)
    return genome, dict(data.get('metadata', {}))


def save_genome(path: PathLike, genome: Genome, config_hash: str = "",
                generation: Optional[int] = None, extra: Optional[dict] = None):
    write_json(path, genome_document(genome, config_hash, generation, extra))


def load_genome(path: PathLike) -> Tuple[Genome, dict]:
    return genome_from_document(read_json(path), str(path))


# === CHECKPOINTS ===

def save_checkpoint(path: PathLike, state: dict):
    write_json(path, {'schema': CHECKPOINT_SCHEMA, 'version': CHECKPOINT_SCHEMA_VERSION, 'state': state})


def load_checkpoint(path: PathLike) -> dict:
    data = read_json(path)
    if not isinstance(data, dict) or data.get('schema') != CHECKPOINT_SCHEMA:
        raise ConfigError(f"not a {CHECKPOINT_SCHEMA} document", path=str(path))
    if data.get('version') != CHECKPOINT_SCHEMA_VERSION:
        raise ConfigError(f"unsupported checkpoint version {data.get('version')}", path=str(path))
    return data['state']


# === REPLAYS ===

def write_replay(path: PathLike, header: dict, records: Iterable[ReplayRecord]):
    """JSON Lines: one header object, then one object per unit per frame"""
    lines = [json.dumps(dict(header, schema=REPLAY_SCHEMA, version=REPLAY_SCHEMA_VERSION, kind='header'))]
    lines.extend(json.dumps(r.to_dict()) for r in records)
    _write_atomic(Path(path), "\n".join(lines) + "\n")


def read_replay(path: PathLike) -> Tuple[dict, List[ReplayRecord]]:
    with open(path, 'r', encoding='utf-8') as f:
        lines = [line for line in f if line.strip()]
    if not lines:
        raise ConfigError("empty replay file", path=str(path))
    header = json.loads(lines[0])
    if header.get('schema') != REPLAY_SCHEMA:
        raise ConfigError(f"not a {REPLAY_SCHEMA} file", path=str(path), line=1)
    return header, [ReplayRecord.from_dict(json.loads(line)) for line in lines[1:]]


# === RUN DIRECTORY ===

class RunStore:
    """One output directory: manifest, best genome, statistics and checkpoints"""

    def __init__(self, out_dir: PathLike):
        self.root = Path(out_dir)
        self.manifest: Optional[RunManifest] = None

    @property
    def manifest_path(self) -> Path:
        return self.root / MANIFEST_FILE

    @property
    def best_genome_path(self) -> Path:
        return self.root / BEST_GENOME_FILE

    @property
    def stats_path(self) -> Path:
        return self.root / STATS_FILE

    @property
    def checkpoint_dir(self) -> Path:
        return self.root / CHECKPOINT_DIR

    def checkpoint_path(self, generation: int) -> Path:
        return self.checkpoint_dir / f"gen_{generation:04d}.json"

    def latest_checkpoint(self) -> Optional[Path]:
        if not self.checkpoint_dir.exists():
            return None
        found = sorted(self.checkpoint_dir.glob("gen_*.json"))
        return found[-1] if found else None

    def save_checkpoint(self, state: dict) -> Path:
        path = self.checkpoint_path(state['generation'])
        save_checkpoint(path, state)
        return path

    def load_latest_checkpoint(self) -> Optional[Tuple[Path, dict]]:
        path = self.latest_checkpoint()
        return (path, load_checkpoint(path)) if path is not None else None

    def write_stats(self, header: Sequence[str], rows: Iterable[Sequence[Any]]):
        write_csv(self.stats_path, header, rows)

    def save_best(self, genome: Genome, config_hash: str = "", generation: Optional[int] = None):
        save_genome(self.best_genome_path, genome, config_hash, generation)

    def start(self, manifest: RunManifest) -> RunManifest:
        self.root.mkdir(parents=True, exist_ok=True)
        self.manifest = manifest
        write_json(self.manifest_path, manifest.to_dict())
        return manifest

    def load_manifest(self) -> RunManifest:
        return RunManifest.from_dict(read_json(self.manifest_path))

    def record(self, path: PathLike):
        """Hash an artifact into the manifest"""
        if self.manifest is None:
            return
        path = Path(path)
        try:
            key = str(path.resolve().relative_to(self.root.resolve()))
        except ValueError:
            key = str(path)
        self.manifest.artifacts[key] = sha256_file(path)

    def finish(self, status: str = "ok"):
        if self.manifest is None:
            return
        self.manifest.finished = now_str()
        self.manifest.status = status
        write_json(self.manifest_path, self.manifest.to_dict())
        logger.debug("manifest written to %s (%s)", self.manifest_path, status)
