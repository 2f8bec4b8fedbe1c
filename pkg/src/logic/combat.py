"""
Combat simulation for MicroNEAT
Deterministic fixed-timestep skirmish between network-driven ranged units
and hand-coded melee units that chase the nearest enemy
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from ..errors import SimInputError
from ..models import (
    ActionCommand, EpisodeResult, ReplayRecord, Scenario, Team, UnitState, WorldState,
    DEFAULT_MOVE_SCALE,
)
from .scenarios import spawn
from .sensors import SensorVector, decode, encode_all, checked_outputs, INITIAL_PREV_ATTACK

logger = logging.getLogger(__name__)

Controller = Callable[[SensorVector], Sequence[float]]


@dataclass
class TickReport:
    """What happened during one step, for replays"""
    orders: Dict[int, ActionCommand] = field(default_factory=dict)
    shots: Dict[int, int] = field(default_factory=dict)  # attacker id -> target id
    fallen: List[UnitState] = field(default_factory=list)


def nearest_enemy(world: WorldState, unit: UnitState) -> Optional[Tuple[UnitState, float]]:
    """Closest living enemy; equal distances go to the lowest id"""
    best = None
    best_distance = math.inf
    for enemy in world.enemies_of(unit):
        distance = unit.distance_to(enemy)
        if distance < best_distance:
            best, best_distance = enemy, distance
    if best is None:
        return None
    return best, best_distance


def zealot_ai(world: WorldState, zealot_id: int, move_scale: float = DEFAULT_MOVE_SCALE) -> ActionCommand:
    """Pursue the nearest enemy and attack once it is in range"""
    zealot = world.units.get(zealot_id)
    if zealot is None or not zealot.is_alive:
        raise SimInputError(f"no living unit {zealot_id} to control")

    found = nearest_enemy(world, zealot)
    if found is None:
        return ActionCommand.idle()
    target, distance = found
    if distance <= zealot.stats.attack_range:
        return ActionCommand(0.0, 0.0, True)

    dx, dy = target.x - zealot.x, target.y - zealot.y
    if distance > move_scale:
        dx, dy = dx * move_scale / distance, dy * move_scale / distance
    return ActionCommand(dx, dy, False)


def _validate_commands(world: WorldState, commands: Mapping[int, ActionCommand]):
    for unit_id, command in commands.items():
        unit = world.units.get(unit_id)
        if unit is None or not unit.is_alive:
            raise SimInputError(f"command for unknown or dead unit {unit_id}")
        if unit.team is Team.MELEE:
            raise SimInputError(f"unit {unit_id} is engine-controlled")
        if not (math.isfinite(command.dx) and math.isfinite(command.dy)):
            raise SimInputError(f"non-finite offset for unit {unit_id}: ({command.dx}, {command.dy})")
    missing = [u.id for u in world.living(Team.RANGED) if u.id not in commands]
    if missing:
        raise SimInputError(f"missing commands for ranged units {missing}")


def _move_toward(unit: UnitState, target_x: float, target_y: float, max_step: float, world: WorldState):
    target_x, target_y = world.bounds.clamp(target_x, target_y)
    dx, dy = target_x - unit.x, target_y - unit.y
    distance = math.hypot(dx, dy)
    if distance <= max_step:
        unit.x, unit.y = target_x, target_y
    else:
        unit.x += dx * max_step / distance
        unit.y += dy * max_step / distance
    unit.x, unit.y = world.bounds.clamp(unit.x, unit.y)


def _target_in_range(world: WorldState, attacker: UnitState) -> Optional[UnitState]:
    found = nearest_enemy(world, attacker)
    if found is None:
        return None
    target, distance = found
    return target if distance <= attacker.stats.attack_range else None


def advance(world: WorldState, commands: Mapping[int, ActionCommand],
            move_scale: float = DEFAULT_MOVE_SCALE) -> Tuple[WorldState, TickReport]:
    """One tick plus a report of the orders, shots and casualties it produced"""
    _validate_commands(world, commands)
    nxt = world.copy()
    report = TickReport()

    living = nxt.living()
    for unit in living:
        if unit.team is Team.RANGED:
            report.orders[unit.id] = commands[unit.id]
        else:
            report.orders[unit.id] = zealot_ai(world, unit.id, move_scale)

    for unit in living:
        unit.cooldown_remaining = max(0.0, unit.cooldown_remaining - nxt.dt)

    # Attacks resolve against start-of-tick positions and land together
    damage: Dict[int, float] = {}
    for unit in living:
        if not report.orders[unit.id].attack or not unit.weapon_ready:
            continue
        target = _target_in_range(nxt, unit)
        if target is None:
            continue
        damage[target.id] = damage.get(target.id, 0.0) + unit.stats.damage
        report.shots[unit.id] = target.id
        unit.cooldown_remaining = unit.stats.cooldown

    for unit in living:
        order = report.orders[unit.id]
        unit.attack_move_flag = order.attack
        if not order.attack:
            _move_toward(unit, unit.x + order.dx, unit.y + order.dy, unit.stats.speed * nxt.dt, nxt)

    for target_id, amount in damage.items():
        target = nxt.units[target_id]
        target.hp = max(0.0, target.hp - amount)

    report.fallen = [u.copy() for u in living if not u.is_alive]
    nxt.units = {uid: u for uid, u in nxt.units.items() if u.is_alive}
    nxt.frame += 1
    return nxt, report


def step(world: WorldState, commands: Mapping[int, ActionCommand],
         move_scale: float = DEFAULT_MOVE_SCALE) -> WorldState:
    """Advance the world by one tick of world.dt seconds"""
    nxt, _ = advance(world, commands, move_scale)
    return nxt


# === EPISODES ===

def _records(world: WorldState, report: Optional[TickReport]) -> List[ReplayRecord]:
    units = list(world.units.values())
    if report is not None:
        units += report.fallen
    records = []
    for unit in sorted(units, key=lambda u: u.id):
        order = report.orders.get(unit.id) if report else None
        records.append(ReplayRecord(
            frame=world.frame,
            unit=unit.id,
            team=unit.team.value,
            x=unit.x,
            y=unit.y,
            hp=unit.hp,
            attack=order.attack if order else None,
            fired=bool(report and unit.id in report.shots),
            target=report.shots.get(unit.id) if report else None,
        ))
    return records


def run_episode(scenario: Scenario, controller: Controller, record: bool = False) -> EpisodeResult:
    """
    Play one scenario until a side is wiped out or the frame budget runs out.

    The controller maps a SensorVector onto three raw outputs; it is shared by every
    ranged unit and may keep per-unit state keyed on SensorVector.unit_id. A
    controller with a reset() method is reset before the first tick.
    """
    world = spawn(scenario)
    reset = getattr(controller, 'reset', None)
    if callable(reset):
        reset()

    prev_outputs = {u.id: INITIAL_PREV_ATTACK for u in world.living(Team.RANGED)}
    replay = _records(world, None) if record else []

    while world.frame < scenario.frame_budget and not world.is_decided:
        commands = {}
        for unit_id, sensors in encode_all(world, prev_outputs).items():
            raw = checked_outputs(controller(sensors))
            commands[unit_id] = decode(raw, scenario.move_scale)
            prev_outputs[unit_id] = min(max(raw[2], 0.0), 1.0)
        world, report = advance(world, commands, scenario.move_scale)
        if record:
            replay.extend(_records(world, report))

    logger.debug("episode %s ended at frame %d: %d ranged, %d melee left",
                 scenario.label, world.frame, world.count(Team.RANGED), world.count(Team.MELEE))
    return EpisodeResult(
        scenario=scenario,
        frames=world.frame,
        ranged_hp=[u.hp for u in world.living(Team.RANGED)],
        melee_hp=[u.hp for u in world.living(Team.MELEE)],
        replay=replay,
    )
