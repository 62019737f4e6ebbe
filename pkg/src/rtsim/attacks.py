"""Attack sampling, recovery checks, knowledge sets and broadcast protocol."""

import math
from dataclasses import dataclass, field

from . import zones
from .estimation import covariance_intersection

_SCHEDULE_EPS = 1e-12

KIND_SENSING = "sensing"
KIND_COMM = "comm"
KIND_DIRECT_JAM = "direct-jam"


@dataclass
class RobotStatus:
    sensing_ok: bool = True
    comm_ok: bool = True

    @property
    def state(self):
        if self.sensing_ok and self.comm_ok:
            return "Healthy"
        if self.comm_ok:
            return "SensingLost"
        if self.sensing_ok:
            return "CommLost"
        return "BothLost"


@dataclass
class AttackEvent:
    step: int
    robot: int
    zone: int
    kind: str
    recovered_at: int | None = None


@dataclass
class Knowledge:
    """Danger-zone knowledge: per-robot private views plus group-shared sets.

    A robot's private set holds every zone it knows about, whether from its
    own attacks or from broadcasts received while connected; the shared sets
    hold what the communication group has been told. Sets only grow.
    """

    shared_sensing: set = field(default_factory=set)
    shared_comm: set = field(default_factory=set)
    private_sensing: dict = field(default_factory=dict)
    private_comm: dict = field(default_factory=dict)

    def ensure_robot(self, robot_id):
        self.private_sensing.setdefault(robot_id, set())
        self.private_comm.setdefault(robot_id, set())


def attempt_due(step, dt, freq):
    """True when a zone with the given attack frequency attempts at `step`.

    Attempts land on steps where floor(t * freq) increments, i.e. a 1 Hz
    zone with dt = 0.1 attempts at steps 10, 20, 30, ...
    """
    if step < 1:
        return False
    now = math.floor(step * dt * freq + _SCHEDULE_EPS)
    before = math.floor((step - 1) * dt * freq + _SCHEDULE_EPS)
    return now > before


def sample_attacks(positions, statuses, sensing_zones, comm_zones, c_star, step, dt, delta1, rng):
    """Sample this step's attack events.

    Zones attempt on their frequency schedule; on an attempt every robot is
    attacked with probability delta1 * phi(zone, x_i), drawing exactly one
    uniform per (zone, robot) in ascending (zone id, robot id) order so the
    event stream is seed-deterministic. Direct jamming additionally fires
    every step the distance-ratio condition holds. A capability that is
    already lost cannot be re-attacked, so every event flips a status flag.
    Statuses passed in are not modified; effective flags are tracked locally
    so simultaneous hits in one call suppress correctly.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    events = []
    sensing_ok = {i: statuses[i].sensing_ok for i in sorted(statuses)}
    comm_ok = {i: statuses[i].comm_ok for i in sorted(statuses)}
    robot_ids = sorted(statuses)

    for zone in sorted(sensing_zones, key=lambda z: z.id):
        if not attempt_due(step, dt, zone.attack_freq):
            continue
        for rid in robot_ids:
            draw = rng.random()
            prob = min(1.0, delta1 * zones.attack_prob_sensing(positions[rid], zone))
            if draw < prob and sensing_ok[rid]:
                sensing_ok[rid] = False
                events.append(AttackEvent(step=step, robot=rid, zone=zone.id, kind=KIND_SENSING))

    for zone in sorted(comm_zones, key=lambda z: z.id):
        if not attempt_due(step, dt, zone.attack_freq):
            continue
        for rid in robot_ids:
            draw = rng.random()
            prob = min(1.0, delta1 * zones.attack_prob_comm(positions[rid], zone))
            if draw < prob and comm_ok[rid]:
                comm_ok[rid] = False
                events.append(AttackEvent(step=step, robot=rid, zone=zone.id, kind=KIND_COMM))

    for zone in sorted(comm_zones, key=lambda z: z.id):
        for rid in robot_ids:
            if comm_ok[rid] and zones.direct_jam_condition(positions[rid], zone, c_star[rid]):
                comm_ok[rid] = False
                events.append(AttackEvent(step=step, robot=rid, zone=zone.id, kind=KIND_DIRECT_JAM))

    return events


def on_attack(event: AttackEvent, knowledge: Knowledge, comm_ok, record=True, share=True):
    """Update knowledge sets for one attack event.

    The attacked robot learns the zone (ground-truth parameters become
    available to it). Sensing zones broadcast immediately when the robot
    still has communication; communication zones stay private until the
    robot recovers and rejoins. `record`/`share` are the mode switches.
    """
    if not record:
        return knowledge
    knowledge.ensure_robot(event.robot)
    if event.kind == KIND_SENSING:
        knowledge.private_sensing[event.robot].add(event.zone)
        if share and comm_ok:
            knowledge.shared_sensing.add(event.zone)
    else:
        knowledge.private_comm[event.robot].add(event.zone)
    return knowledge


def sync_connected(knowledge: Knowledge, statuses):
    """Propagate the shared sets into every connected robot's private view.

    The network is instantaneous, so robots in the communication group
    always hold the group's zone knowledge; disconnected robots keep only
    what they knew when they lost the link plus their own discoveries.
    """
    for rid, status in statuses.items():
        if status.comm_ok:
            knowledge.ensure_robot(rid)
            knowledge.private_sensing[rid] |= knowledge.shared_sensing
            knowledge.private_comm[rid] |= knowledge.shared_comm
    return knowledge


def check_recovery(position, active_sensing, active_comm, zones_by_id, c_star_rejoin):
    """Recovery decision for one robot against the zones currently holding it.

    Sensing recovers when every holding sensing zone's margin at its own
    eps_recover is >= 0 (boundary inclusive). Communication additionally
    requires the realized jammer to be out of direct reach at the distance
    the robot would rejoin with.
    """
    sensing_recovered = bool(active_sensing) and all(
        zones.sensing_margin(position, zones_by_id[zid], zones_by_id[zid].eps_recover) >= 0.0
        for zid in active_sensing
    )
    comm_recovered = bool(active_comm) and all(
        zones.comm_margin(position, zones_by_id[zid], 0.0, zones_by_id[zid].eps_recover) >= 0.0
        and not zones.direct_jam_condition(position, zones_by_id[zid], c_star_rejoin)
        for zid in active_comm
    )
    return sensing_recovered, comm_recovered


def rejoin_broadcast(robot_id, knowledge: Knowledge, robot_bank, group_bank, share=True):
    """Rejoin protocol for a robot whose communication just recovered.

    Broadcasts the robot's private zone knowledge into the shared sets (when
    sharing is enabled), syncs the shared sets back into its private view,
    and merges its filter bank with the group's by covariance intersection;
    afterwards both banks hold the merged estimates. Returns the CI omegas.
    """
    knowledge.ensure_robot(robot_id)
    if share:
        knowledge.shared_sensing |= knowledge.private_sensing[robot_id]
        knowledge.shared_comm |= knowledge.private_comm[robot_id]
    knowledge.private_sensing[robot_id] |= knowledge.shared_sensing
    knowledge.private_comm[robot_id] |= knowledge.shared_comm

    omegas = []
    for j, (mine, theirs) in enumerate(zip(robot_bank.estimates, group_bank.estimates)):
        merged, omega = covariance_intersection(mine, theirs)
        group_bank.estimates[j] = merged
        robot_bank.estimates[j] = merged.copy()
        omegas.append(omega)
    return omegas


def comm_group(statuses):
    """Ids of robots currently in the communication group."""
    return sorted(i for i, status in statuses.items() if status.comm_ok)
