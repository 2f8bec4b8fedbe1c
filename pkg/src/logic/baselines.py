"""
Scripted controllers and replay analysis for MicroNEAT
Baseline policies that read the same 40 sensors as an evolved network,
plus the fire/retreat statistics used to spot kiting in a replay
"""
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..errors import ConfigError
from ..models import ActionCommand, ReplayRecord, Team, UnitType, DEFAULT_MOVE_SCALE
from .sensors import QUADRANT_DIRECTIONS, SensorVector, encode_action

logger = logging.getLogger(__name__)

POLICIES = ("stand_and_fire", "flee", "random", "kite")

WALL_MARGIN = 0.1  # boundary sensor value below which a unit is pushed off the wall
OUTER_THREAT_WEIGHT = 0.5


def _threat_direction(sensors: SensorVector) -> np.ndarray:
    """Unit vector toward the weighted enemy mass, or zeros when no enemy is sensed"""
    counts = sensors.enemy_count
    weights = counts[:4] + OUTER_THREAT_WEIGHT * counts[4:]
    vector = weights @ QUADRANT_DIRECTIONS
    norm = float(np.hypot(*vector))
    return vector / norm if norm > 0 else np.zeros(2)


def _wall_push(sensors: SensorVector) -> np.ndarray:
    north, south, east, west = sensors.boundary
    push = np.zeros(2)
    if north < WALL_MARGIN:
        push[1] -= 1.0
    if south < WALL_MARGIN:
        push[1] += 1.0
    if east < WALL_MARGIN:
        push[0] -= 1.0
    if west < WALL_MARGIN:
        push[0] += 1.0
    return push


def _move(direction: np.ndarray, attack: bool = False) -> Tuple[float, float, float]:
    norm = float(np.hypot(*direction))
    if norm == 0:
        return encode_action(ActionCommand(0.0, 0.0, attack), DEFAULT_MOVE_SCALE)
    dx, dy = direction / norm * DEFAULT_MOVE_SCALE
    return encode_action(ActionCommand(float(dx), float(dy), attack), DEFAULT_MOVE_SCALE)


# === POLICIES ===

class StandAndFire:
    """Never moves; attacks whatever comes into range"""

    def __call__(self, sensors: SensorVector) -> Tuple[float, float, float]:
        return (0.5, 0.5, 1.0)


class Flee:
    """Runs away from the sensed enemy mass and never attacks"""

    def __call__(self, sensors: SensorVector) -> Tuple[float, float, float]:
        threat = _threat_direction(sensors)
        if not threat.any():
            return (0.5, 0.5, 0.0)
        return _move(-threat + _wall_push(sensors))


class RandomPolicy:
    """Uniform random outputs from a seeded generator, reseeded on every episode"""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.rng = np.random.default_rng(seed)

    def reset(self):
        self.rng = np.random.default_rng(self.seed)

    def __call__(self, sensors: SensorVector) -> Tuple[float, float, float]:
        o1, o2, o3 = self.rng.random(3)
        return (float(o1), float(o2), float(o3))


class Kite:
    """
    Hit and run: fire when loaded and an enemy is in range, back off while the
    weapon cools down, close in again once it is ready.
    """

    def __call__(self, sensors: SensorVector) -> Tuple[float, float, float]:
        threat = _threat_direction(sensors)
        if not threat.any():
            return (0.5, 0.5, 0.0)
        in_range = float(sensors.enemy_count[:4].sum()) > 0
        loaded = sensors.self_cooldown <= 0.0
        if in_range and loaded:
            return (0.5, 0.5, 1.0)
        if in_range:
            return _move(-threat + _wall_push(sensors))
        if loaded:
            return _move(threat)
        return (0.5, 0.5, 0.0)


def make_policy(name: str, seed: int = 0):
    """Controller for a baseline policy name"""
    key = name.strip().lower()
    if key == "stand_and_fire":
        return StandAndFire()
    if key == "flee":
        return Flee()
    if key == "random":
        return RandomPolicy(seed)
    if key == "kite":
        return Kite()
    raise ConfigError(f"unknown policy '{name}' (expected one of: {', '.join(POLICIES)})")


# === REPLAY ANALYSIS ===

@dataclass
class KitingReport:
    fire_events: int
    fire_then_retreat: int
    fires_in_range: int
    ranged_frames: int
    frames_outside_melee_range: int

    @property
    def alternation_rate(self) -> float:
        """Share of shots followed by a retreat before the next shot"""
        return self.fire_then_retreat / self.fire_events if self.fire_events else 0.0

    @property
    def in_range_fire_fraction(self) -> float:
        return self.fires_in_range / self.fire_events if self.fire_events else 0.0

    @property
    def outside_melee_fraction(self) -> float:
        return self.frames_outside_melee_range / self.ranged_frames if self.ranged_frames else 0.0

    def to_dict(self) -> dict:
        return {
            'fire_events': self.fire_events,
            'fire_then_retreat': self.fire_then_retreat,
            'alternation_rate': self.alternation_rate,
            'in_range_fire_fraction': self.in_range_fire_fraction,
            'outside_melee_fraction': self.outside_melee_fraction,
        }


def _nearest(record: ReplayRecord, enemies: Sequence[ReplayRecord]) -> float:
    return min((math.hypot(e.x - record.x, e.y - record.y) for e in enemies), default=math.inf)


def analyze_replay(records: Sequence[ReplayRecord],
                   attack_range: float = UnitType.VULTURE.stats.attack_range,
                   melee_range: float = UnitType.ZEALOT.stats.attack_range) -> KitingReport:
    """
    Fire and retreat statistics of the ranged side.

    A retreat is a frame on which a ranged unit ends farther from the nearest melee
    unit than on the previous frame.
    """
    frames: Dict[int, List[ReplayRecord]] = defaultdict(list)
    for record in records:
        frames[record.frame].append(record)

    fire_events = fire_then_retreat = fires_in_range = 0
    ranged_frames = outside = 0
    last_distance: Dict[int, float] = {}
    awaiting_retreat: Dict[int, bool] = {}

    for frame in sorted(frames):
        snapshot = frames[frame]
        by_id = {r.unit: r for r in snapshot}
        melee = [r for r in snapshot if r.team == Team.MELEE.value and r.hp > 0]
        for record in snapshot:
            if record.team != Team.RANGED.value or record.hp <= 0:
                continue
            distance = _nearest(record, melee)
            ranged_frames += 1
            if distance > melee_range:
                outside += 1

            previous = last_distance.get(record.unit)
            retreated = previous is not None and math.isfinite(distance) and distance > previous
            if retreated and awaiting_retreat.get(record.unit):
                fire_then_retreat += 1
                awaiting_retreat[record.unit] = False

            if record.fired:
                fire_events += 1
                awaiting_retreat[record.unit] = True
                target = by_id.get(record.target) if record.target is not None else None
                gap = math.hypot(target.x - record.x, target.y - record.y) if target else distance
                if gap <= attack_range + 1e-9:
                    fires_in_range += 1
            last_distance[record.unit] = distance

    report = KitingReport(fire_events, fire_then_retreat, fires_in_range, ranged_frames, outside)
    logger.debug("replay analysis: %s", report.to_dict())
    return report
