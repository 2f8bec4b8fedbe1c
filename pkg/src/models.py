"""
Data models for MicroNEAT
Units, world state, scenarios, episode results and evolution settings
"""
import math
from dataclasses import dataclass, field, replace
from datetime import datetime
from enum import Enum
from typing import Dict, List, Optional, Tuple


# === CONSTANTS ===
DEFAULT_DT = 1.0 / 16.0  # 16 ticks per simulated second
DEFAULT_FRAME_BUDGET = 3000
DEFAULT_MAP_SIZE = 64.0
DEFAULT_MOVE_SCALE = 10.0  # decode radius for network displacement outputs
DEFAULT_RANGED_COUNT = 5

GROUP_SPACING = 1.0  # grid packing distance inside a spawn group
RING_RADIUS = 10.0  # surround / surrounded ring
CORNER_OFFSET = 8.0  # group centre distance from the map edges

NUM_REGIONS = 8
NUM_INPUTS = 40
NUM_OUTPUTS = 3

COOLDOWN_EPSILON = 1e-9


class Team(str, Enum):
    RANGED = "ranged"
    MELEE = "melee"

    @property
    def opponent(self) -> 'Team':
        return Team.MELEE if self is Team.RANGED else Team.RANGED


class Formation(str, Enum):
    """Spawn configurations of the two groups"""
    DIAGONAL = "diagonal"
    REVERSED_DIAGONAL = "reversed_diagonal"
    SIDE_BY_SIDE = "side_by_side"
    REVERSED_SIDE_BY_SIDE = "reversed_side_by_side"
    SURROUND = "surround"
    SURROUNDED = "surrounded"
    RANDOM = "random"


def now_str() -> str:
    return datetime.now().strftime("%Y-%m-%d %H:%M:%S")


# === UNITS ===

@dataclass(frozen=True)
class UnitStats:
    """Combat stat block of one unit type"""
    hitpoints_max: float
    damage: float
    attack_range: float
    speed: float
    cooldown: float

    def problems(self) -> List[str]:
        issues = []
        for name in ('hitpoints_max', 'damage', 'attack_range', 'speed', 'cooldown'):
            value = getattr(self, name)
            if not (value > 0) or not math.isfinite(value):
                issues.append(f"{name} must be strictly positive (got {value})")
        return issues

    def to_dict(self) -> dict:
        return {
            'hitpoints_max': self.hitpoints_max,
            'damage': self.damage,
            'attack_range': self.attack_range,
            'speed': self.speed,
            'cooldown': self.cooldown,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'UnitStats':
        return cls(
            hitpoints_max=float(data['hitpoints_max']),
            damage=float(data['damage']),
            attack_range=float(data['attack_range']),
            speed=float(data['speed']),
            cooldown=float(data['cooldown']),
        )


class UnitType(Enum):
    """Unit presets: Brood War vulture and zealot, StarCraft II hellion"""

    @property
    def stats(self) -> UnitStats:
        return self.value

    @property
    def key(self) -> str:
        return self.name.lower()

    @classmethod
    def from_key(cls, key: str) -> 'UnitType':
        try:
            return cls[key.upper()]
        except KeyError:
            valid = ", ".join(t.key for t in cls)
            raise ValueError(f"unknown unit type '{key}' (expected one of: {valid})") from None

    VULTURE = UnitStats(hitpoints_max=80, damage=20, attack_range=5, speed=4.96, cooldown=1.26)
    HELLION = UnitStats(hitpoints_max=90, damage=13, attack_range=5, speed=5.95, cooldown=1.78)
    ZEALOT = UnitStats(hitpoints_max=100, damage=16, attack_range=0.1, speed=3.15, cooldown=0.857)


@dataclass(frozen=True)
class MapBounds:
    """Axis-aligned map rectangle in world units"""
    x_min: float = 0.0
    y_min: float = 0.0
    x_max: float = DEFAULT_MAP_SIZE
    y_max: float = DEFAULT_MAP_SIZE

    @classmethod
    def square(cls, size: float) -> 'MapBounds':
        return cls(0.0, 0.0, float(size), float(size))

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)

    @property
    def center(self) -> Tuple[float, float]:
        return ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def clamp(self, x: float, y: float) -> Tuple[float, float]:
        return (min(max(x, self.x_min), self.x_max), min(max(y, self.y_min), self.y_max))

    def translated(self, tx: float, ty: float) -> 'MapBounds':
        return MapBounds(self.x_min + tx, self.y_min + ty, self.x_max + tx, self.y_max + ty)

    def to_dict(self) -> dict:
        return {'x_min': self.x_min, 'y_min': self.y_min, 'x_max': self.x_max, 'y_max': self.y_max}

    @classmethod
    def from_dict(cls, data: dict) -> 'MapBounds':
        return cls(float(data['x_min']), float(data['y_min']), float(data['x_max']), float(data['y_max']))


@dataclass
class UnitState:
    """One combat entity"""
    id: int
    team: Team
    x: float
    y: float
    stats: UnitStats
    hp: float = -1.0  # -1 -> spawn at full hitpoints
    cooldown_remaining: float = 0.0  # units may fire on the first tick
    attack_move_flag: bool = True

    def __post_init__(self):
        if self.hp < 0:
            self.hp = float(self.stats.hitpoints_max)

    @property
    def position(self) -> Tuple[float, float]:
        return (self.x, self.y)

    @property
    def is_alive(self) -> bool:
        return self.hp > 0

    @property
    def weapon_ready(self) -> bool:
        return self.cooldown_remaining <= COOLDOWN_EPSILON

    def distance_to(self, other: 'UnitState') -> float:
        return math.hypot(other.x - self.x, other.y - self.y)

    def copy(self) -> 'UnitState':
        return replace(self)


@dataclass(frozen=True)
class ActionCommand:
    """Displacement target relative to the unit plus the attack/move switch"""
    dx: float = 0.0
    dy: float = 0.0
    attack: bool = False

    @classmethod
    def idle(cls) -> 'ActionCommand':
        return cls(0.0, 0.0, False)


@dataclass
class WorldState:
    """Everything the simulation knows at one tick"""
    units: Dict[int, UnitState]
    bounds: MapBounds = field(default_factory=MapBounds)
    frame: int = 0
    dt: float = DEFAULT_DT
    initial_counts: Dict[Team, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.initial_counts:
            self.initial_counts = {team: len(self.living(team)) for team in Team}

    def living(self, team: Optional[Team] = None) -> List[UnitState]:
        """Living units in id order, optionally of one team"""
        return [u for _, u in sorted(self.units.items())
                if u.is_alive and (team is None or u.team is team)]

    def count(self, team: Team) -> int:
        return sum(1 for u in self.units.values() if u.team is team and u.is_alive)

    def enemies_of(self, unit: UnitState) -> List[UnitState]:
        return self.living(unit.team.opponent)

    @property
    def is_decided(self) -> bool:
        """One side has lost every unit"""
        return self.count(Team.RANGED) == 0 or self.count(Team.MELEE) == 0

    def copy(self) -> 'WorldState':
        return WorldState(
            units={uid: u.copy() for uid, u in self.units.items()},
            bounds=self.bounds,
            frame=self.frame,
            dt=self.dt,
            initial_counts=dict(self.initial_counts),
        )

    def snapshot(self) -> tuple:
        """Hashable tick state used for determinism checks"""
        return (self.frame,) + tuple(
            (uid, u.x, u.y, u.hp, u.cooldown_remaining, u.attack_move_flag)
            for uid, u in sorted(self.units.items())
        )


# === SCENARIOS ===

@dataclass(frozen=True)
class Scenario:
    """One spawn configuration with its unit counts and simulation settings"""
    formation: Formation = Formation.DIAGONAL
    melee_count: int = 25
    ranged_count: int = DEFAULT_RANGED_COUNT
    ranged_type: UnitType = UnitType.VULTURE
    melee_type: UnitType = UnitType.ZEALOT
    map_size: float = DEFAULT_MAP_SIZE
    frame_budget: int = DEFAULT_FRAME_BUDGET
    spawn_seed: int = 0
    dt: float = DEFAULT_DT
    move_scale: float = DEFAULT_MOVE_SCALE

    @property
    def ranged_stats(self) -> UnitStats:
        return self.ranged_type.stats

    @property
    def melee_stats(self) -> UnitStats:
        return self.melee_type.stats

    @property
    def bounds(self) -> MapBounds:
        return MapBounds.square(self.map_size)

    @property
    def label(self) -> str:
        return f"{self.formation.value}, {self.melee_count} {self.melee_type.key}s"

    @property
    def max_fitness(self) -> float:
        """Fitness when every melee unit dies and no ranged damage is taken"""
        return (self.melee_count * self.melee_stats.hitpoints_max
                + self.ranged_count * self.ranged_stats.hitpoints_max)

    def problems(self) -> List[Tuple[str, str]]:
        issues = []
        if self.ranged_count <= 0:
            issues.append(('ranged_count', "must be > 0"))
        if self.melee_count <= 0:
            issues.append(('melee_count', "must be > 0"))
        if not self.map_size > 0:
            issues.append(('map_size', "must be > 0"))
        if self.frame_budget < 0:
            issues.append(('frame_budget', "must be >= 0"))
        if not self.dt > 0:
            issues.append(('dt', "must be > 0"))
        if not self.move_scale > 0:
            issues.append(('move_scale', "must be > 0"))
        for unit_type in (self.ranged_type, self.melee_type):
            if unit_type.stats.attack_range > self.bounds.diagonal:
                issues.append(('map_size', f"{unit_type.key} attack range exceeds the map diagonal"))
        return issues

    def with_seed(self, seed: int) -> 'Scenario':
        return replace(self, spawn_seed=int(seed))

    def to_dict(self) -> dict:
        return {
            'formation': self.formation.value,
            'melee_count': self.melee_count,
            'ranged_count': self.ranged_count,
            'ranged_type': self.ranged_type.key,
            'melee_type': self.melee_type.key,
            'map_size': self.map_size,
            'frame_budget': self.frame_budget,
            'spawn_seed': self.spawn_seed,
            'dt': self.dt,
            'move_scale': self.move_scale,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'Scenario':
        return cls(
            formation=Formation(data.get('formation', Formation.DIAGONAL.value)),
            melee_count=int(data.get('melee_count', 25)),
            ranged_count=int(data.get('ranged_count', DEFAULT_RANGED_COUNT)),
            ranged_type=UnitType.from_key(data.get('ranged_type', 'vulture')),
            melee_type=UnitType.from_key(data.get('melee_type', 'zealot')),
            map_size=float(data.get('map_size', DEFAULT_MAP_SIZE)),
            frame_budget=int(data.get('frame_budget', DEFAULT_FRAME_BUDGET)),
            spawn_seed=int(data.get('spawn_seed', 0)),
            dt=float(data.get('dt', DEFAULT_DT)),
            move_scale=float(data.get('move_scale', DEFAULT_MOVE_SCALE)),
        )


# === EPISODES ===

@dataclass
class ReplayRecord:
    """One unit at one frame; frame 0 holds the spawn state"""
    frame: int
    unit: int
    team: str
    x: float
    y: float
    hp: float
    attack: Optional[bool] = None
    fired: bool = False
    target: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            'frame': self.frame,
            'unit': self.unit,
            'team': self.team,
            'x': self.x,
            'y': self.y,
            'hp': self.hp,
            'attack': self.attack,
            'fired': self.fired,
            'target': self.target,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'ReplayRecord':
        return cls(
            frame=int(data['frame']),
            unit=int(data['unit']),
            team=data['team'],
            x=float(data['x']),
            y=float(data['y']),
            hp=float(data['hp']),
            attack=data.get('attack'),
            fired=bool(data.get('fired', False)),
            target=data.get('target'),
        )


@dataclass
class FitnessInputs:
    """End-of-episode quantities the fitness function reads"""
    nz: int  # starting melee units
    hz: List[float]  # remaining hitpoints of surviving melee units
    hh: List[float]  # remaining hitpoints of surviving ranged units
    hz_max: float  # melee hitpoints_max

    @property
    def rz(self) -> int:
        return len(self.hz)

    @property
    def rh(self) -> int:
        return len(self.hh)

    def problems(self) -> List[str]:
        issues = []
        if self.rz > self.nz:
            issues.append(f"Rz={self.rz} exceeds Nz={self.nz}")
        if any(not (0 < h <= self.hz_max) for h in self.hz):
            issues.append("melee hitpoints must lie in (0, Hzmax]")
        if any(not h > 0 for h in self.hh):
            issues.append("ranged hitpoints must be positive")
        return issues


@dataclass
class EpisodeResult:
    """Outcome of one episode"""
    scenario: Scenario
    frames: int
    ranged_hp: List[float]
    melee_hp: List[float]
    replay: List[ReplayRecord] = field(default_factory=list)

    @property
    def remaining_ranged(self) -> int:
        return len(self.ranged_hp)

    @property
    def remaining_melee(self) -> int:
        return len(self.melee_hp)

    def fitness_inputs(self) -> FitnessInputs:
        return FitnessInputs(
            nz=self.scenario.melee_count,
            hz=list(self.melee_hp),
            hh=list(self.ranged_hp),
            hz_max=self.scenario.melee_stats.hitpoints_max,
        )

    def summary(self) -> dict:
        return {
            'scenario': self.scenario.label,
            'frames': self.frames,
            'remaining_ranged': self.remaining_ranged,
            'remaining_melee': self.remaining_melee,
            'ranged_hp': list(self.ranged_hp),
            'melee_hp': list(self.melee_hp),
        }


# === EVOLUTION ===

@dataclass
class EvolutionConfig:
    """NEAT hyper-parameters; defaults reproduce the simulation preset"""
    population_size: int = 50
    generations: int = 100
    target_species: int = 5
    initial_connection_prob: float = 0.2
    elitism_proportion: float = 0.2
    selection_proportion: float = 0.2
    asexual_proportion: float = 0.5
    sexual_proportion: float = 0.5
    interspecies_mating_rate: float = 0.01
    weight_range: float = 5.0
    weight_mutation_prob: float = 0.95
    add_node_prob: float = 0.01
    add_connection_prob: float = 0.025
    delete_connection_prob: float = 0.025
    seed: int = 0

    # Canonical NEAT defaults for the remaining knobs
    compat_excess: float = 1.0
    compat_disjoint: float = 1.0
    compat_weight: float = 0.4
    compat_threshold: float = 3.0
    threshold_adjust: float = 0.1
    min_threshold: float = 0.1
    reenable_prob: float = 0.25
    weight_perturb_sigma: float = 0.5
    weight_replace_prob: float = 0.1
    stagnation_limit: int = 15
    ranged_hp_weight: float = 1.0

    PROPORTIONS = (
        'initial_connection_prob', 'elitism_proportion', 'selection_proportion',
        'asexual_proportion', 'sexual_proportion', 'interspecies_mating_rate',
        'weight_mutation_prob', 'add_node_prob', 'add_connection_prob',
        'delete_connection_prob', 'reenable_prob', 'weight_replace_prob',
    )

    def problems(self) -> List[Tuple[str, str]]:
        """(field, message) pairs for every violated invariant"""
        issues = []
        if self.population_size <= 0:
            issues.append(('population_size', "must be > 0"))
        if self.generations < 0:
            issues.append(('generations', "must be >= 0"))
        if self.target_species <= 0:
            issues.append(('target_species', "must be > 0"))
        for name in self.PROPORTIONS:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                issues.append((name, f"must lie in [0, 1] (got {value})"))
        if abs(self.asexual_proportion + self.sexual_proportion - 1.0) > 1e-9:
            issues.append(('sexual_proportion', "asexual + sexual proportions must sum to 1"))
        if not self.weight_range > 0:
            issues.append(('weight_range', "must be > 0"))
        if not self.compat_threshold > 0:
            issues.append(('compat_threshold', "must be > 0"))
        if self.stagnation_limit <= 0:
            issues.append(('stagnation_limit', "must be > 0"))
        if self.ranged_hp_weight < 0:
            issues.append(('ranged_hp_weight', "must be >= 0"))
        return issues

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, data: dict) -> 'EvolutionConfig':
        config = cls()
        for name, spec in cls.__dataclass_fields__.items():
            if name in data:
                default = getattr(config, name)
                setattr(config, name, type(default)(data[name]))
        return config


@dataclass
class SimulationSettings:
    """Map, timing and unit-type settings shared by every scenario of a run"""
    map_size: float = DEFAULT_MAP_SIZE
    frame_budget: int = DEFAULT_FRAME_BUDGET
    dt: float = DEFAULT_DT
    move_scale: float = DEFAULT_MOVE_SCALE
    ranged_count: int = DEFAULT_RANGED_COUNT
    ranged_type: str = "vulture"
    melee_type: str = "zealot"

    def base_scenario(self) -> Scenario:
        return Scenario(
            ranged_count=self.ranged_count,
            ranged_type=UnitType.from_key(self.ranged_type),
            melee_type=UnitType.from_key(self.melee_type),
            map_size=self.map_size,
            frame_budget=self.frame_budget,
            dt=self.dt,
            move_scale=self.move_scale,
        )

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


@dataclass
class RunSettings:
    """Execution settings that never change results"""
    checkpoint_every: int = 5
    workers: int = 1
    retries: int = 3

    def problems(self) -> List[Tuple[str, str]]:
        issues = []
        for name in ('checkpoint_every', 'workers', 'retries'):
            if getattr(self, name) < 1:
                issues.append((name, "must be >= 1"))
        return issues

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


@dataclass
class RunManifest:
    """What ran, with which inputs, and what it produced"""
    command: str
    output_dir: str
    config_path: str = ""
    seed: Optional[int] = None
    config_hash: str = ""
    arguments: List[str] = field(default_factory=list)
    started: str = field(default_factory=now_str)
    finished: str = ""
    status: str = "running"
    artifacts: Dict[str, str] = field(default_factory=dict)  # relative path -> sha256

    def to_dict(self) -> dict:
        return {
            'command': self.command,
            'output_dir': self.output_dir,
            'config_path': self.config_path,
            'seed': self.seed,
            'config_hash': self.config_hash,
            'arguments': list(self.arguments),
            'started': self.started,
            'finished': self.finished,
            'status': self.status,
            'artifacts': dict(self.artifacts),
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'RunManifest':
        manifest = cls(command=data.get('command', ''), output_dir=data.get('output_dir', ''))
        manifest.config_path = data.get('config_path', '')
        manifest.seed = data.get('seed')
        manifest.config_hash = data.get('config_hash', '')
        manifest.arguments = list(data.get('arguments', []))
        manifest.started = data.get('started', '')
        manifest.finished = data.get('finished', '')
        manifest.status = data.get('status', '')
        manifest.artifacts = dict(data.get('artifacts', {}))
        return manifest
