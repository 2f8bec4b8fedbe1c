"""
State encoder for MicroNEAT
Turns a WorldState into the 40 network inputs of one unit and decodes the 3 network outputs

Input layout (positional, genomes depend on it):
    0-7    enemy average distance, regions R1..R8
    8-15   friendly average distance, regions R1..R8
    16-23  enemy count, regions R1..R8
    24-31  friendly count, regions R1..R8
    32-35  boundary distance N, S, E, W
    36     own weapon cooldown
    37     own hitpoints
    38     current attack/move state
    39     previous raw attack/move output

Regions: world-axis quadrants Q1=(+x,+y), Q2=(-x,+y), Q3=(-x,-y), Q4=(+x,-y) around the
unit. R1-R4 are the parts of Q1-Q4 within attack range (inclusive), R5-R8 the parts beyond.
A unit on an axis belongs to the lower-numbered adjacent quadrant; a co-located unit to R1.
"""
import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from ..errors import SimInputError
from ..models import (
    ActionCommand, Team, UnitState, WorldState,
    NUM_INPUTS, NUM_OUTPUTS, NUM_REGIONS,
)


ENEMY_DIST = slice(0, 8)
FRIENDLY_DIST = slice(8, 16)
ENEMY_COUNT = slice(16, 24)
FRIENDLY_COUNT = slice(24, 32)
BOUNDARY = slice(32, 36)
SELF_COOLDOWN = 36
SELF_HP = 37
ATTACK_STATE = 38
PREV_ATTACK = 39

EMPTY_REGION_DISTANCE = 1.0
INITIAL_PREV_ATTACK = 1.0

INPUT_LABELS = (
    [f"enemy_avg_dist_R{i}" for i in range(1, 9)]
    + [f"friendly_avg_dist_R{i}" for i in range(1, 9)]
    + [f"enemy_count_R{i}" for i in range(1, 9)]
    + [f"friendly_count_R{i}" for i in range(1, 9)]
    + ["boundary_N", "boundary_S", "boundary_E", "boundary_W",
       "self_cooldown", "self_hp", "current_attack_state", "prev_attack_output"]
)

# Unit direction of each quadrant, used by sensor-only scripted controllers
QUADRANT_DIRECTIONS = np.array([
    [1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0],
]) / math.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class SensorVector:
    """The 40 scaled inputs of one controlled unit"""
    unit_id: int
    values: np.ndarray

    def __len__(self):
        return len(self.values)

    def __getitem__(self, index):
        return self.values[index]

    def tolist(self) -> List[float]:
        return self.values.tolist()

    @property
    def enemy_avg_dist(self) -> np.ndarray:
        return self.values[ENEMY_DIST]

    @property
    def friendly_avg_dist(self) -> np.ndarray:
        return self.values[FRIENDLY_DIST]

    @property
    def enemy_count(self) -> np.ndarray:
        return self.values[ENEMY_COUNT]

    @property
    def friendly_count(self) -> np.ndarray:
        return self.values[FRIENDLY_COUNT]

    @property
    def boundary(self) -> np.ndarray:
        return self.values[BOUNDARY]

    @property
    def self_cooldown(self) -> float:
        return float(self.values[SELF_COOLDOWN])

    @property
    def self_hp(self) -> float:
        return float(self.values[SELF_HP])

    @property
    def current_attack_state(self) -> float:
        return float(self.values[ATTACK_STATE])

    @property
    def prev_attack_output(self) -> float:
        return float(self.values[PREV_ATTACK])


# === REGIONS ===

def region_indices(dx: np.ndarray, dy: np.ndarray, attack_range: float) -> np.ndarray:
    """Region index 0..7 (R1..R8) of each relative position"""
    dx = np.asarray(dx, dtype=float)
    dy = np.asarray(dy, dtype=float)
    quadrant = np.where(dy >= 0, np.where(dx >= 0, 0, 1), np.where(dx > 0, 3, 2))
    outer = np.hypot(dx, dy) > attack_range
    return quadrant + 4 * outer.astype(int)


def region_of(dx: float, dy: float, attack_range: float) -> int:
    return int(region_indices(np.array([dx]), np.array([dy]), attack_range)[0])


def _region_block(dx: np.ndarray, dy: np.ndarray, attack_range: float,
                  diagonal: float, side_total: int) -> Tuple[np.ndarray, np.ndarray]:
    """Scaled (avg distance, count) per region for one group of units"""
    if dx.size == 0:
        return np.full(NUM_REGIONS, EMPTY_REGION_DISTANCE), np.zeros(NUM_REGIONS)
    distances = np.hypot(dx, dy)
    regions = region_indices(dx, dy, attack_range)
    counts = np.bincount(regions, minlength=NUM_REGIONS).astype(float)
    sums = np.bincount(regions, weights=distances, minlength=NUM_REGIONS)

    scale = np.empty(NUM_REGIONS)
    scale[:4] = attack_range
    scale[4:] = diagonal
    with np.errstate(invalid='ignore', divide='ignore'):
        avg = np.where(counts > 0, sums / np.maximum(counts, 1.0) / scale, EMPTY_REGION_DISTANCE)
    return np.clip(avg, 0.0, 1.0), np.clip(counts / max(side_total, 1), 0.0, 1.0)


def _encode_unit(world: WorldState, unit: UnitState, others_xy: np.ndarray,
                 others_enemy: np.ndarray, prev_attack_output: float) -> SensorVector:
    stats = unit.stats
    bounds = world.bounds
    values = np.empty(NUM_INPUTS)

    rel = others_xy - np.array([unit.x, unit.y]) if len(others_xy) else np.zeros((0, 2))
    enemy_total = world.initial_counts.get(unit.team.opponent) or world.count(unit.team.opponent)
    friendly_total = world.initial_counts.get(unit.team) or world.count(unit.team)

    enemy_rel = rel[others_enemy]
    friendly_rel = rel[~others_enemy]
    values[ENEMY_DIST], values[ENEMY_COUNT] = _region_block(
        enemy_rel[:, 0], enemy_rel[:, 1], stats.attack_range, bounds.diagonal, enemy_total)
    values[FRIENDLY_DIST], values[FRIENDLY_COUNT] = _region_block(
        friendly_rel[:, 0], friendly_rel[:, 1], stats.attack_range, bounds.diagonal, friendly_total)

    values[BOUNDARY] = np.clip([
        (bounds.y_max - unit.y) / bounds.height,
        (unit.y - bounds.y_min) / bounds.height,
        (bounds.x_max - unit.x) / bounds.width,
        (unit.x - bounds.x_min) / bounds.width,
    ], 0.0, 1.0)
    values[SELF_COOLDOWN] = min(max(unit.cooldown_remaining / stats.cooldown, 0.0), 1.0)
    values[SELF_HP] = min(max(unit.hp / stats.hitpoints_max, 0.0), 1.0)
    values[ATTACK_STATE] = 1.0 if unit.attack_move_flag else 0.0
    values[PREV_ATTACK] = min(max(float(prev_attack_output), 0.0), 1.0)
    return SensorVector(unit_id=unit.id, values=values)


# === ENCODE / DECODE ===

def encode(world: WorldState, unit_id: int, prev_attack_output: float = INITIAL_PREV_ATTACK) -> SensorVector:
    """Sensor vector of one living unit"""
    unit = world.units.get(unit_id)
    if unit is None or not unit.is_alive:
        raise SimInputError(f"cannot encode unknown or dead unit {unit_id}")
    others = [u for u in world.living() if u.id != unit_id]
    xy = np.array([[u.x, u.y] for u in others], dtype=float).reshape(-1, 2)
    enemy = np.array([u.team is not unit.team for u in others], dtype=bool)
    return _encode_unit(world, unit, xy, enemy, prev_attack_output)


def encode_all(world: WorldState, prev_outputs: Mapping[int, float],
               team: Team = Team.RANGED) -> Dict[int, SensorVector]:
    """Sensor vectors for every living unit of a team, sharing one pass over the world"""
    living = world.living()
    xy = np.array([[u.x, u.y] for u in living], dtype=float).reshape(-1, 2)
    teams = np.array([u.team is Team.RANGED for u in living], dtype=bool)
    sensors = {}
    for index, unit in enumerate(living):
        if unit.team is not team:
            continue
        keep = np.ones(len(living), dtype=bool)
        keep[index] = False
        enemy = teams[keep] != (unit.team is Team.RANGED)
        sensors[unit.id] = _encode_unit(
            world, unit, xy[keep], enemy, prev_outputs.get(unit.id, INITIAL_PREV_ATTACK))
    return sensors


def checked_outputs(raw_outputs: Sequence[float]) -> Tuple[float, float, float]:
    try:
        values = [float(v) for v in raw_outputs]
    except (TypeError, ValueError) as e:
        raise SimInputError(f"network outputs are not numeric: {e}") from None
    if len(values) != NUM_OUTPUTS:
        raise SimInputError(f"expected {NUM_OUTPUTS} network outputs, got {len(values)}")
    if not all(math.isfinite(v) for v in values):
        raise SimInputError(f"network outputs must be finite: {values}")
    return values[0], values[1], values[2]


def decode(raw_outputs: Sequence[float], move_scale: float) -> ActionCommand:
    """Map outputs in [0, 1] onto a displacement of at most move_scale per axis"""
    o1, o2, o3 = (min(max(v, 0.0), 1.0) for v in checked_outputs(raw_outputs))
    return ActionCommand(
        dx=(o1 - 0.5) * 2.0 * move_scale,
        dy=(o2 - 0.5) * 2.0 * move_scale,
        attack=o3 > 0.5,
    )


def encode_action(command: ActionCommand, move_scale: float) -> Tuple[float, float, float]:
    """Raw outputs that decode back to the given command"""
    def axis(offset: float) -> float:
        return min(max(offset / (2.0 * move_scale) + 0.5, 0.0), 1.0)
    return axis(command.dx), axis(command.dy), 1.0 if command.attack else 0.0
