"""Chance-constrained planning: joint group, single-robot and escape regimes.

Slack variables enter the group objective linearly with nonnegative weights
and each appears in exactly one constraint, so the inner minimization has
the closed form nu* = max(0, -margin). The planner therefore minimizes the
equivalent hinge-penalized objective over controls alone, box-bounded by
u_max, with a derivative-free coordinate grid-refine solver by default.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels, zones
from .dynamics import AgentModel
from .estimation import SensorModel, TargetEstimate

_OBJ_MODES = {"trace-predicted": 0, "distance-surrogate": 1}


@dataclass(frozen=True)
class PlannerConfig:
    w1: float = 1.0
    w2: float = 0.01
    w3: float = 5.0
    w4: float = 5.0
    eps1: float = 0.05
    eps2: float = 0.05
    u_max: float = 1.0
    solver: str = "grid-refine"
    grid_points: int = 17
    grid_rounds: int = 3
    pg_max_iters: int = 60
    pg_tol: float = 1e-9
    objective_kind: str = "trace-predicted"
    standoff: float = 0.4
    escape_inside_boost: float = 2.0

    def __post_init__(self):
        for name in ("w1", "w2", "w3", "w4"):
            w = getattr(self, name)
            if not (np.isfinite(w) and w >= 0.0):
                raise ValueError(f"{name} must be finite and >= 0")
        for name in ("eps1", "eps2"):
            eps = getattr(self, name)
            if not 0.0 < eps <= 0.5:
                raise ValueError(f"{name} must lie in (0, 0.5]")
        if self.u_max <= 0.0:
            raise ValueError("u_max must be > 0")
        if self.solver not in ("grid-refine", "projected-gradient"):
            raise ValueError(f"unknown solver: {self.solver!r}")
        if self.objective_kind not in _OBJ_MODES:
            raise ValueError(f"unknown objective_kind: {self.objective_kind!r}")
        if self.grid_points < 3 or self.grid_rounds < 1:
            raise ValueError("grid solver needs >= 3 points and >= 1 round")


@dataclass
class PlanAgent:
    """Planning view of one robot: state, model, sensing role, assignment."""

    robot_id: int
    position: np.ndarray
    model: AgentModel
    sensor: SensorModel
    sensing_ok: bool
    assigned: frozenset = frozenset()

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float).reshape(2)


@dataclass
class PlanResult:
    controls: dict
    slacks_nu: dict
    slacks_xi: dict
    objective_value: float
    feasible_without_slack: bool
    improved: bool
    accepted_objectives: list = field(default_factory=list)


def eliminate_slacks(margins):
    """Closed-form optimal slacks max(0, -g) for hinge-relaxed constraints."""
    margins = np.asarray(margins, dtype=float)
    return np.maximum(0.0, -margins)


def tracking_objective(
    positions,
    estimates,
    sensors,
    objective_kind="trace-predicted",
    assignment=None,
    standoff=0.4,
):
    """Tracking cost of candidate positions against predicted estimates.

    trace-predicted: summed trace of the one-step EKF posterior covariance
    (targets without observers contribute their prior trace).
    distance-surrogate: per target, squared error of the best observer's
    distance to the configured standoff.
    assignment: optional per-robot iterables of target indices (default all).
    """
    positions = np.asarray(positions, dtype=float)
    if positions.size == 0:
        positions = np.zeros((0, 2))
    positions = np.atleast_2d(positions)
    n_robots = positions.shape[0]
    n_targets = len(estimates)
    px = np.ascontiguousarray(positions[:, 0])
    py = np.ascontiguousarray(positions[:, 1])
    sense = np.ones(n_robots, dtype=np.uint8)
    zx = np.array([e.mean[0] for e in estimates])
    zy = np.array([e.mean[1] for e in estimates])
    c00 = np.array([e.cov[0, 0] for e in estimates])
    c01 = np.array([e.cov[0, 1] for e in estimates])
    c11 = np.array([e.cov[1, 1] for e in estimates])
    assign = np.ones((n_robots, n_targets), dtype=np.uint8)
    if assignment is not None:
        assign[:] = 0
        for i, targets in enumerate(assignment):
            for j in targets:
                assign[i, j] = 1
    if objective_kind == "trace-predicted":
        rinv_r = np.array([1.0 / s.range_std**2 for s in sensors])
        rinv_b = np.array([1.0 / s.bearing_std**2 for s in sensors])
        return float(
            kernels.posterior_trace(px, py, sense, zx, zy, c00, c01, c11, rinv_r, rinv_b, assign)
        )
    if objective_kind == "distance-surrogate":
        return float(kernels.distance_surrogate(px, py, sense, zx, zy, assign, standoff))
    raise ValueError(f"unknown objective_kind: {objective_kind!r}")


class _Problem:
    """Packed arrays for the group objective kernel plus id bookkeeping."""

    def __init__(
        self,
        agents,
        estimates,
        sensing_zones,
        comm_zones,
        config: PlannerConfig,
        cstar_zero,
        tracking_on,
        sensing_boost=None,
        comm_boost=None,
        zone_visibility=None,
    ):
        if not agents:
            raise ValueError("cannot plan for an empty group")
        self.agents = sorted(agents, key=lambda a: a.robot_id)
        self.config = config
        self.sensing_zones = sorted(sensing_zones, key=lambda z: z.id)
        self.comm_zones = sorted(comm_zones, key=lambda z: z.id)
        self.cstar_zero = cstar_zero

        m = len(self.agents)
        n = len(estimates)
        self.x = np.array([a.position for a in self.agents])
        self.phis = np.array([a.model.process for a in self.agents])
        self.lams = np.array([a.model.control for a in self.agents])
        self.sense = np.array([1 if a.sensing_ok else 0 for a in self.agents], dtype=np.uint8)
        self.rinv_r = np.array([1.0 / a.sensor.range_std**2 for a in self.agents])
        self.rinv_b = np.array([1.0 / a.sensor.bearing_std**2 for a in self.agents])
        self.zx = np.array([e.mean[0] for e in estimates]) if n else np.zeros(0)
        self.zy = np.array([e.mean[1] for e in estimates]) if n else np.zeros(0)
        self.c00 = np.array([e.cov[0, 0] for e in estimates]) if n else np.zeros(0)
        self.c01 = np.array([e.cov[0, 1] for e in estimates]) if n else np.zeros(0)
        self.c11 = np.array([e.cov[1, 1] for e in estimates]) if n else np.zeros(0)
        self.assign = np.zeros((m, n), dtype=np.uint8)
        for i, agent in enumerate(self.agents):
            for j in agent.assigned:
                if j < n:
                    self.assign[i, j] = 1

        p = len(self.sensing_zones)
        q = len(self.comm_zones)
        self.s_mu = (
            np.array([z.mu for z in self.sensing_zones]) if p else np.zeros((0, 2))
        )
        self.s_cov = (
            np.array([[z.sigma[0, 0], z.sigma[0, 1], z.sigma[1, 1]] for z in self.sensing_zones])
            if p
            else np.zeros((0, 3))
        )
        self.s_clear = np.array([z.radius for z in self.sensing_zones]) if p else np.zeros(0)
        sensing_boost = np.ones(p) if sensing_boost is None else np.asarray(sensing_boost, dtype=float)
        self.s_w = config.w3 * sensing_boost
        self.c_mu = np.array([z.mu for z in self.comm_zones]) if q else np.zeros((0, 2))
        self.c_cov = (
            np.array([[z.sigma[0, 0], z.sigma[0, 1], z.sigma[1, 1]] for z in self.comm_zones])
            if q
            else np.zeros((0, 3))
        )
        self.c_delta2 = np.array([z.delta2 for z in self.comm_zones]) if q else np.zeros(0)
        comm_boost = np.ones(q) if comm_boost is None else np.asarray(comm_boost, dtype=float)
        self.c_w = config.w4 * comm_boost

        # A zone constrains a robot only when the robot knows about it.
        self.s_vis = np.ones((m, p), dtype=np.uint8)
        self.c_vis = np.ones((m, q), dtype=np.uint8)
        if zone_visibility is not None:
            for i, agent in enumerate(self.agents):
                known_s, known_c = zone_visibility.get(agent.robot_id, (set(), set()))
                for l, zone in enumerate(self.sensing_zones):
                    self.s_vis[i, l] = 1 if zone.id in known_s else 0
                for k, zone in enumerate(self.comm_zones):
                    self.c_vis[i, k] = 1 if zone.id in known_c else 0

        self.beta1 = zones.beta_for(config.eps1)
        self.beta2 = zones.beta_for(config.eps2)
        self.w1 = config.w1 if tracking_on else 0.0
        self.obj_mode = _OBJ_MODES[config.objective_kind]
        self.bounds = np.repeat(
            [min(a.model.u_max, config.u_max) for a in self.agents], 2
        ).astype(float)

    def objective(self, u):
        return float(
            kernels.group_objective(
                u, self.x, self.phis, self.lams, self.sense,
                self.w1, self.config.w2, self.obj_mode, self.config.standoff,
                self.zx, self.zy, self.c00, self.c01, self.c11,
                self.rinv_r, self.rinv_b, self.assign,
                self.s_mu, self.s_cov, self.s_clear, self.s_w, self.s_vis,
                self.c_mu, self.c_cov, self.c_delta2, self.c_w, self.c_vis,
                self.beta1, self.beta2, 1 if self.cstar_zero else 0,
            )
        )

    def candidates(self, u):
        m = len(self.agents)
        out = np.empty((m, 2))
        for i in range(m):
            out[i] = self.phis[i] @ self.x[i] + self.lams[i] @ u[2 * i : 2 * i + 2]
        return out

    def cstar(self, candidates):
        m = candidates.shape[0]
        if self.cstar_zero or m == 1:
            return np.zeros(m)
        diff = candidates[:, None, :] - candidates[None, :, :]
        dists = np.hypot(diff[..., 0], diff[..., 1])
        return dists.max(axis=1)


def _solve_grid(problem: _Problem, config: PlannerConfig):
    dim = 2 * len(problem.agents)
    incumbent = np.zeros(dim)
    best = problem.objective(incumbent)
    accepted = [best]
    spans = problem.bounds.copy()
    for _ in range(config.grid_rounds):
        for d in range(dim):
            lo = max(-problem.bounds[d], incumbent[d] - spans[d])
            hi = min(problem.bounds[d], incumbent[d] + spans[d])
            trial = incumbent.copy()
            for value in np.linspace(lo, hi, config.grid_points):
                trial[d] = value
                val = problem.objective(trial)
                if val < best:
                    best = val
                    incumbent = trial.copy()
                    accepted.append(best)
        spans /= 4.0
    return incumbent, best, accepted


def _solve_projected_gradient(problem: _Problem, config: PlannerConfig):
    dim = 2 * len(problem.agents)
    u = np.zeros(dim)
    best = problem.objective(u)
    accepted = [best]
    h = 1e-5
    for _ in range(config.pg_max_iters):
        grad = np.zeros(dim)
        for d in range(dim):
            up = u.copy()
            dn = u.copy()
            up[d] = min(problem.bounds[d], u[d] + h)
            dn[d] = max(-problem.bounds[d], u[d] - h)
            grad[d] = (problem.objective(up) - problem.objective(dn)) / (up[d] - dn[d])
        if not np.any(grad):
            break
        step = 1.0
        improved = False
        while step > 1e-7:
            trial = np.clip(u - step * grad, -problem.bounds, problem.bounds)
            val = problem.objective(trial)
            if val < best - config.pg_tol:
                u, best = trial, val
                accepted.append(best)
                improved = True
                break
            step *= 0.5
        if not improved:
            break
    return u, best, accepted


def _finish(problem: _Problem, u, best, accepted, config: PlannerConfig):
    candidates = problem.candidates(u)
    cstar = problem.cstar(candidates)
    slacks_nu = {}
    slacks_xi = {}
    for i, agent in enumerate(problem.agents):
        for l, zone in enumerate(problem.sensing_zones):
            if problem.s_vis[i, l] == 0:
                continue
            g = zones.sensing_margin(candidates[i], zone, config.eps1)
            slacks_nu[(agent.robot_id, zone.id)] = max(0.0, -g)
        for k, zone in enumerate(problem.comm_zones):
            if problem.c_vis[i, k] == 0:
                continue
            g = zones.comm_margin(candidates[i], zone, cstar[i], config.eps2)
            slacks_xi[(agent.robot_id, zone.id)] = max(0.0, -g)
    controls = {
        agent.robot_id: u[2 * i : 2 * i + 2].copy()
        for i, agent in enumerate(problem.agents)
    }
    feasible = all(v == 0.0 for v in slacks_nu.values()) and all(
        v == 0.0 for v in slacks_xi.values()
    )
    return PlanResult(
        controls=controls,
        slacks_nu=slacks_nu,
        slacks_xi=slacks_xi,
        objective_value=best,
        feasible_without_slack=feasible,
        improved=len(accepted) > 1,
        accepted_objectives=accepted,
    )


def _solve(problem: _Problem, config: PlannerConfig):
    if config.solver == "grid-refine":
        u, best, accepted = _solve_grid(problem, config)
    else:
        u, best, accepted = _solve_projected_gradient(problem, config)
    return _finish(problem, u, best, accepted, config)


def plan_group(
    agents,
    estimates,
    sensing_zones,
    comm_zones,
    config: PlannerConfig,
    cstar_zero=False,
    zone_visibility=None,
):
    """Joint slack-relaxed plan for the communication group.

    Tracking cost covers only sensing-capable agents; chance-constraint
    hinges apply over the known zones, with each agent's farthest-teammate
    distance evaluated at the candidate positions. zone_visibility
    optionally restricts which zones constrain which robot (robot_id ->
    (sensing ids, comm ids)); by default all passed zones constrain all.
    """
    problem = _Problem(
        agents, estimates, sensing_zones, comm_zones, config,
        cstar_zero=cstar_zero, tracking_on=True, zone_visibility=zone_visibility,
    )
    return _solve(problem, config)


def plan_single(agent, estimates, sensing_zones, comm_zones, config: PlannerConfig):
    """Individual plan for a comm-lost, sensing-capable robot (c* = 0)."""
    if not agent.sensing_ok:
        raise ValueError("plan_single requires sensing; use plan_escape")
    return plan_group(
        [agent], estimates, sensing_zones, comm_zones, config, cstar_zero=True
    )


def plan_escape(agent, sensing_zones, comm_zones, config: PlannerConfig):
    """Minimum-effort escape plan: no tracking term, hinge penalties only.

    Zones the robot currently sits inside get their slack weight boosted by
    escape_inside_boost so it prioritizes leaving them.
    """
    sensing_zones = sorted(sensing_zones, key=lambda z: z.id)
    comm_zones = sorted(comm_zones, key=lambda z: z.id)
    s_boost = np.array(
        [
            config.escape_inside_boost
            if zones.sensing_margin(agent.position, z, config.eps1) < 0.0
            else 1.0
            for z in sensing_zones
        ]
    )
    c_boost = np.array(
        [
            config.escape_inside_boost
            if zones.comm_margin(agent.position, z, 0.0, config.eps2) < 0.0
            else 1.0
            for z in comm_zones
        ]
    )
    problem = _Problem(
        [agent], [], sensing_zones, comm_zones, config,
        cstar_zero=True, tracking_on=False,
        sensing_boost=s_boost, comm_boost=c_boost,
    )
    return _solve(problem, config)
