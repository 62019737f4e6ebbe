"""Per-step orchestration for resilient / vanilla / individual tracking runs.

Step order is fixed: attacks -> knowledge -> recovery -> rejoin/CI ->
EKF predict -> measure/update -> plan -> move robots -> move targets ->
metrics + log record. This keeps the knowledge available to the planner
maximal and causally consistent within a step.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import attacks, simlog
from .attacks import Knowledge, RobotStatus
from .config import ScenarioConfig
from .dynamics import step_agent, target_control
from .estimation import (
    FilterBank,
    TargetEstimate,
    ekf_predict,
    ekf_update,
    measure,
    mse,
    total_trace,
)
from .planner import PlanAgent, plan_escape, plan_group, plan_single
from .simlog import SimLog, StepRecord

log = logging.getLogger("rtsim.sim")


@dataclass(frozen=True)
class ModeSwitches:
    """Behavior toggles per tracking mode."""

    record_knowledge: bool
    share_knowledge: bool
    escape_enabled: bool


def mode_policy(mode):
    """Knowledge/planning switches for a tracking mode.

    resilient: full protocol. vanilla: no knowledge retention and no escape
    objective (comm-lost robots plan with zero known zones, robots that lost
    everything hold position). individual: private knowledge and escape, but
    nothing is ever promoted to the shared sets; CI merges still happen.
    """
    if mode == "resilient":
        return ModeSwitches(True, True, True)
    if mode == "vanilla":
        return ModeSwitches(False, False, False)
    if mode == "individual":
        return ModeSwitches(True, False, True)
    raise ValueError(f"unknown mode: {mode!r}")


@dataclass
class RobotRuntime:
    rid: int
    spec: object
    pos: np.ndarray
    status: RobotStatus = field(default_factory=RobotStatus)
    active_sensing: set = field(default_factory=set)
    active_comm: set = field(default_factory=set)
    bank: FilterBank | None = None
    open_sensing_events: list = field(default_factory=list)
    open_comm_events: list = field(default_factory=list)


@dataclass
class TargetRuntime:
    tid: int
    spec: object
    pos: np.ndarray
    cursor: int = 0


class World:
    """Mutable simulation state for one run."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.switches = mode_policy(config.mode)
        seq = np.random.SeedSequence(config.seed)
        attack_seq, meas_seq = seq.spawn(2)
        self.rng_attacks = np.random.default_rng(attack_seq)
        self.rng_meas = np.random.default_rng(meas_seq)
        self.step_index = 0

        self.robots = {
            i: RobotRuntime(rid=i, spec=spec, pos=spec.start.copy())
            for i, spec in enumerate(config.robots)
        }
        self.targets = [
            TargetRuntime(tid=j, spec=spec, pos=spec.start.copy())
            for j, spec in enumerate(config.targets)
        ]
        q_mat = config.q_scale * np.eye(2)
        self.group_bank = FilterBank(
            owner="group",
            estimates=[
                TargetEstimate(spec.start + config.init_offset, config.init_cov * np.eye(2))
                for spec in config.targets
            ],
            process_noise=q_mat,
        )
        self.knowledge = Knowledge()
        for rid in self.robots:
            self.knowledge.ensure_robot(rid)
        self.zones_by_id = {z.id: z for z in config.sensing_zones}
        self.zones_by_id.update({z.id: z for z in config.comm_zones})
        self.events = []
        self.records = []

    # -- helpers -----------------------------------------------------------

    def _statuses(self):
        return {rid: r.status for rid, r in self.robots.items()}

    def _cstar_true(self):
        """Farthest-teammate distance per robot over the current comm group."""
        group = attacks.comm_group(self._statuses())
        out = {rid: 0.0 for rid in self.robots}
        for rid in group:
            others = [g for g in group if g != rid]
            if others:
                out[rid] = max(
                    float(np.linalg.norm(self.robots[rid].pos - self.robots[g].pos))
                    for g in others
                )
        return out

    def _cstar_rejoin(self, rid):
        """Distance the robot would rejoin with: farthest current group member."""
        group = [g for g in attacks.comm_group(self._statuses()) if g != rid]
        if not group:
            return 0.0
        return max(
            float(np.linalg.norm(self.robots[rid].pos - self.robots[g].pos)) for g in group
        )

    def _predict_bank(self, bank):
        for j, est in enumerate(bank.estimates):
            bank.estimates[j] = ekf_predict(
                est, self.config.targets[j].model, None, bank.process_noise
            )

    def _predicted_estimates(self, bank):
        """One-step-ahead (mean, cov) view of a bank for planning."""
        return [
            ekf_predict(est, self.config.targets[j].model, None, bank.process_noise)
            for j, est in enumerate(bank.estimates)
        ]

    def _known_zones(self, rid):
        ks = self.knowledge.private_sensing.get(rid, set())
        kc = self.knowledge.private_comm.get(rid, set())
        s_zones = [self.zones_by_id[z] for z in sorted(ks)]
        c_zones = [self.zones_by_id[z] for z in sorted(kc)]
        return s_zones, c_zones

    def _plan_agent(self, rid):
        robot = self.robots[rid]
        return PlanAgent(
            robot_id=rid,
            position=robot.pos,
            model=robot.spec.model,
            sensor=robot.spec.sensor,
            sensing_ok=robot.status.sensing_ok,
            assigned=frozenset(robot.spec.assigned),
        )


def step(world: World):
    """Advance the world by one step, appending a log record."""
    world.step_index += 1
    s = world.step_index
    cfg = world.config
    positions = {rid: r.pos for rid, r in world.robots.items()}

    # (1) sample attacks on the deterministic schedule
    new_events = attacks.sample_attacks(
        positions,
        world._statuses(),
        cfg.sensing_zones,
        cfg.comm_zones,
        world._cstar_true(),
        s,
        cfg.dt,
        cfg.delta1,
        world.rng_attacks,
    )

    # (2) apply status effects and knowledge updates
    for ev in new_events:
        robot = world.robots[ev.robot]
        idx = len(world.events)
        world.events.append(ev)
        log.info("step %d: %s attack on robot %d from zone %d", s, ev.kind, ev.robot, ev.zone)
        if ev.kind == attacks.KIND_SENSING:
            robot.status.sensing_ok = False
            robot.active_sensing.add(ev.zone)
            robot.open_sensing_events.append(idx)
        else:
            if robot.status.comm_ok:
                robot.bank = world.group_bank.copy(owner=f"robot-{ev.robot}")
            robot.status.comm_ok = False
            robot.active_comm.add(ev.zone)
            robot.open_comm_events.append(idx)
        attacks.on_attack(
            ev,
            world.knowledge,
            comm_ok=robot.status.comm_ok,
            record=world.switches.record_knowledge,
            share=world.switches.share_knowledge,
        )

    # (3) recovery checks against the zones currently holding each robot
    rejoined = []
    for rid in sorted(world.robots):
        robot = world.robots[rid]
        if not robot.active_sensing and not robot.active_comm:
            continue
        sensing_rec, comm_rec = attacks.check_recovery(
            robot.pos,
            robot.active_sensing,
            robot.active_comm,
            world.zones_by_id,
            world._cstar_rejoin(rid),
        )
        if sensing_rec:
            robot.status.sensing_ok = True
            robot.active_sensing.clear()
            for idx in robot.open_sensing_events:
                world.events[idx].recovered_at = s
            robot.open_sensing_events.clear()
        if comm_rec:
            robot.status.comm_ok = True
            robot.active_comm.clear()
            for idx in robot.open_comm_events:
                world.events[idx].recovered_at = s
            robot.open_comm_events.clear()
            rejoined.append(rid)

    # (4) rejoin broadcast + covariance-intersection merges
    for rid in rejoined:
        robot = world.robots[rid]
        if robot.bank is not None:
            attacks.rejoin_broadcast(
                rid,
                world.knowledge,
                robot.bank,
                world.group_bank,
                share=world.switches.share_knowledge,
            )
            robot.bank = None

    # shared knowledge reaches every connected robot instantaneously
    attacks.sync_connected(world.knowledge, world._statuses())

    # (5) EKF predict for every active filter bank
    world._predict_bank(world.group_bank)
    for robot in world.robots.values():
        if robot.bank is not None:
            world._predict_bank(robot.bank)

    # (6) measurements and EKF updates (group bank + split banks)
    measurements = {}
    for rid in sorted(world.robots):
        robot = world.robots[rid]
        if not robot.status.sensing_ok:
            continue
        for j in sorted(robot.spec.assigned):
            m = measure(robot.pos, world.targets[j].pos, robot.spec.sensor, world.rng_meas)
            if m is not None:
                measurements[(rid, j)] = m
            else:
                log.debug("step %d: robot %d coincident with target %d, skipped", s, rid, j)
    group_ids = attacks.comm_group(world._statuses())
    for j in range(len(world.targets)):
        obs = [
            (world.robots[rid].pos, *measurements[(rid, j)], world.robots[rid].spec.sensor)
            for rid in group_ids
            if (rid, j) in measurements
        ]
        if obs:
            world.group_bank.estimates[j], skipped = ekf_update(world.group_bank.estimates[j], obs)
            if skipped:
                log.debug("step %d: %d singular observations skipped for target %d", s, skipped, j)
    for rid in sorted(world.robots):
        robot = world.robots[rid]
        if robot.bank is None or not robot.status.sensing_ok:
            continue
        for j in sorted(robot.spec.assigned):
            if (rid, j) in measurements:
                robot.bank.estimates[j], _ = ekf_update(
                    robot.bank.estimates[j],
                    [(robot.pos, *measurements[(rid, j)], robot.spec.sensor)],
                )

    # (7) planning per regime
    controls = {rid: np.zeros(2) for rid in world.robots}
    slacks_nu = []
    slacks_xi = []

    if group_ids:
        agents = [world._plan_agent(rid) for rid in group_ids]
        visibility = {}
        zone_ids_s = set()
        zone_ids_c = set()
        for rid in group_ids:
            ks = world.knowledge.private_sensing.get(rid, set())
            kc = world.knowledge.private_comm.get(rid, set())
            visibility[rid] = (ks, kc)
            zone_ids_s |= ks
            zone_ids_c |= kc
        s_zones = [world.zones_by_id[z] for z in sorted(zone_ids_s)]
        c_zones = [world.zones_by_id[z] for z in sorted(zone_ids_c)]
        result = plan_group(
            agents,
            world._predicted_estimates(world.group_bank),
            s_zones,
            c_zones,
            cfg.planner,
            zone_visibility=visibility,
        )
        for rid, u in result.controls.items():
            controls[rid] = u
        slacks_nu.extend((r, z, v) for (r, z), v in sorted(result.slacks_nu.items()))
        slacks_xi.extend((r, z, v) for (r, z), v in sorted(result.slacks_xi.items()))

    for rid in sorted(world.robots):
        robot = world.robots[rid]
        if robot.status.comm_ok:
            continue
        s_zones, c_zones = world._known_zones(rid)
        if robot.status.sensing_ok:
            result = plan_single(
                world._plan_agent(rid),
                world._predicted_estimates(robot.bank),
                s_zones,
                c_zones,
                cfg.planner,
            )
        elif world.switches.escape_enabled:
            result = plan_escape(world._plan_agent(rid), s_zones, c_zones, cfg.planner)
        else:
            continue  # vanilla: immobilized once everything is lost
        controls[rid] = result.controls[rid]
        slacks_nu.extend((r, z, v) for (r, z), v in sorted(result.slacks_nu.items()))
        slacks_xi.extend((r, z, v) for (r, z), v in sorted(result.slacks_xi.items()))

    # (8) apply robot controls
    for rid in sorted(world.robots):
        robot = world.robots[rid]
        robot.pos = step_agent(robot.pos, controls[rid], robot.spec.model)

    # (9) move targets
    for tgt in world.targets:
        u, tgt.cursor = target_control(tgt.spec.policy, tgt.pos, s - 1, tgt.cursor)
        tgt.pos = step_agent(tgt.pos, u, tgt.spec.model)

    # (10) metrics + record
    n_robots = len(world.robots)
    n_targets = len(world.targets)
    bank_means = np.zeros((n_robots + 1, n_targets, 2))
    bank_traces = np.zeros((n_robots + 1, n_targets))
    for j, est in enumerate(world.group_bank.estimates):
        bank_means[0, j] = est.mean
        bank_traces[0, j] = est.trace
    for rid in sorted(world.robots):
        robot = world.robots[rid]
        bank = robot.bank if robot.bank is not None else world.group_bank
        for j, est in enumerate(bank.estimates):
            bank_means[rid + 1, j] = est.mean
            bank_traces[rid + 1, j] = est.trace

    truths = [tgt.pos for tgt in world.targets]
    record = StepRecord(
        step=s,
        t=s * cfg.dt,
        robot_xy=np.array([world.robots[rid].pos for rid in sorted(world.robots)]),
        sensing_ok=np.array([world.robots[rid].status.sensing_ok for rid in sorted(world.robots)]),
        comm_ok=np.array([world.robots[rid].status.comm_ok for rid in sorted(world.robots)]),
        controls=np.array([controls[rid] for rid in sorted(world.robots)]),
        target_xy=np.array(truths),
        bank_means=bank_means,
        bank_traces=bank_traces,
        slacks_nu=slacks_nu,
        slacks_xi=slacks_xi,
        mse=mse(world.group_bank.estimates, truths),
        total_trace=total_trace(world.group_bank.estimates),
        shared_sensing_count=len(world.knowledge.shared_sensing),
        shared_comm_count=len(world.knowledge.shared_comm),
    )
    world.records.append(record)
    return world


def run(config: ScenarioConfig) -> SimLog:
    """Execute a full scenario; pure function of (config, seed)."""
    world = World(config)
    try:
        for _ in range(config.max_steps):
            step(world)
    except Exception as exc:
        raise RuntimeError(f"simulation failed at step {world.step_index + 1}: {exc}") from exc
    meta = simlog.make_meta(config.resolved_dict(), config.seed)
    return SimLog(meta=meta, steps=world.records, events=world.events)


@dataclass
class Metrics:
    mse_series: np.ndarray
    trace_series: np.ndarray
    mse_final_mean: float
    trace_final_mean: float
    attack_counts: dict
    recovery_latencies: list
    n_recoveries: int
    shared_final: int
    ends_all_sensing_lost: bool
    last_sensing_loss_step: int | None
    trace_monotone_after_loss: bool | None


def compute_metrics(log: SimLog) -> Metrics:
    """Per-run metric summary; the final window covers the last 25% of steps."""
    mse_series = np.array([rec.mse for rec in log.steps])
    trace_series = np.array([rec.total_trace for rec in log.steps])
    n = len(log.steps)
    window = max(1, round(0.25 * n))
    counts = {}
    latencies = []
    for ev in log.events:
        counts[ev.kind] = counts.get(ev.kind, 0) + 1
        if ev.recovered_at is not None:
            latencies.append(ev.recovered_at - ev.step)
    n_recoveries = sum(1 for ev in log.events if ev.recovered_at is not None)

    last_rec = log.steps[-1]
    ends_all_lost = bool(n and not last_rec.sensing_ok.any())
    last_loss = None
    monotone = None
    if ends_all_lost:
        loss_steps = [ev.step for ev in log.events if ev.kind == attacks.KIND_SENSING]
        last_loss = max(loss_steps) if loss_steps else 1
        tail = trace_series[last_loss - 1 :]
        monotone = bool(np.all(np.diff(tail) >= -1e-12))

    return Metrics(
        mse_series=mse_series,
        trace_series=trace_series,
        mse_final_mean=float(mse_series[-window:].mean()),
        trace_final_mean=float(trace_series[-window:].mean()),
        attack_counts=counts,
        recovery_latencies=latencies,
        n_recoveries=n_recoveries,
        shared_final=last_rec.shared_sensing_count + last_rec.shared_comm_count,
        ends_all_sensing_lost=ends_all_lost,
        last_sensing_loss_step=last_loss,
        trace_monotone_after_loss=monotone,
    )
