"""Self-validation: Monte-Carlo chance-constraint check, slack equivalence.

Both checks are exposed on the CLI (`rtsim validate`) and reused by the
acceptance test suite.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels, zones
from .dynamics import AgentModel
from .estimation import SensorModel, TargetEstimate
from .planner import PlannerConfig, PlanAgent, _Problem, tracking_objective
from .zones import CommZone, SensingZone


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def chance_constraint_check(seed=0, n_zones=20, eps_levels=(0.05, 0.1, 0.2), n_samples=100_000):
    """Monte-Carlo validation of the erf-linearized sensing margin.

    For random isotropic zones, construct the point where the margin is
    exactly zero at each confidence level and verify the sampled membership
    probability does not exceed eps + 0.01 (the half-space linearization
    upper-bounds the disk probability).
    """
    rng = np.random.default_rng(seed)
    worst_excess = -np.inf
    checked = 0
    for i in range(n_zones):
        scale = rng.uniform(0.05, 0.5)
        zone = SensingZone(
            id=i,
            mu=rng.uniform(-2.0, 2.0, size=2),
            sigma=scale * np.eye(2),
            radius=rng.uniform(0.1, 1.0),
            attack_freq=1.0,
            eps_recover=0.1,
        )
        angle = rng.uniform(0.0, 2.0 * math.pi)
        direction = np.array([math.cos(angle), math.sin(angle)])
        for eps in eps_levels:
            beta = zones.beta_for(eps)
            rho = zone.radius + beta * math.sqrt(2.0 * scale)
            x = zone.mu - rho * direction
            margin = zones.sensing_margin(x, zone, eps)
            if abs(margin) > 1e-9:
                return CheckResult(
                    "chance-constraint", False,
                    f"zone {i}: constructed point has margin {margin:.3e}, expected 0",
                )
            est = zones.membership_prob_mc(x, zone, 0.0, n_samples, rng)
            excess = est - eps
            worst_excess = max(worst_excess, excess)
            checked += 1
            if excess > 0.01:
                return CheckResult(
                    "chance-constraint", False,
                    f"zone {i} eps={eps}: MC membership {est:.4f} exceeds {eps} + 0.01",
                )
    return CheckResult(
        "chance-constraint", True,
        f"{checked} zone/eps cases, worst MC excess over eps: {worst_excess:+.4f}",
    )


def _vertex_slack(margin):
    """Brute-force inner minimizer of w*s s.t. s >= 0, margin + s >= 0.

    Enumerates the LP vertex candidates {0, -margin} and keeps the cheapest
    feasible one; independent of the hinge expression used in the planner.
    """
    feasible = [c for c in (0.0, -margin) if c >= 0.0 and margin + c >= 0.0]
    return min(feasible)


def _random_spd(rng, scale=0.3):
    a = rng.uniform(-1.0, 1.0, size=(2, 2))
    return scale * (a @ a.T) + 0.05 * np.eye(2)


def slack_equivalence_check(seed=0, n_instances=100, grid_points=21):
    """Brute-force joint (u, nu, xi) minimization vs. the hinge objective.

    On random single-robot instances with up to 3 known zones, enumerates
    controls on a grid, solves the inner slack minimization by LP-vertex
    enumeration, and compares against the fused hinge-penalty kernel at
    every grid point. Exact-arithmetic equality is required up to 1e-12.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for inst in range(n_instances):
        n_total = int(rng.integers(0, 4))
        n_sense = int(rng.integers(0, n_total + 1))
        n_comm = n_total - n_sense
        sensing_zones = [
            SensingZone(
                id=l,
                mu=rng.uniform(-1.5, 1.5, size=2),
                sigma=_random_spd(rng),
                radius=rng.uniform(0.1, 0.8),
                attack_freq=1.0,
                eps_recover=0.1,
            )
            for l in range(n_sense)
        ]
        comm_zones = [
            CommZone(
                id=n_sense + k,
                mu=rng.uniform(-1.5, 1.5, size=2),
                sigma=_random_spd(rng),
                delta2=rng.uniform(0.2, 0.8),
                attack_freq=1.0,
                eps_recover=0.1,
            )
            for k in range(n_comm)
        ]
        config = PlannerConfig(
            w1=rng.uniform(0.0, 2.0),
            w2=rng.uniform(0.0, 0.5),
            w3=rng.uniform(0.0, 8.0),
            w4=rng.uniform(0.0, 8.0),
            eps1=rng.uniform(0.02, 0.5),
            eps2=rng.uniform(0.02, 0.5),
            u_max=1.0,
        )
        agent = PlanAgent(
            robot_id=0,
            position=rng.uniform(-1.5, 1.5, size=2),
            model=AgentModel.single_integrator(0.1, 1.0),
            sensor=SensorModel(0.05, 0.05),
            sensing_ok=True,
            assigned=frozenset({0}),
        )
        estimate = TargetEstimate(rng.uniform(-1.5, 1.5, size=2), _random_spd(rng, 0.1))
        problem = _Problem(
            [agent], [estimate], sensing_zones, comm_zones, config,
            cstar_zero=True, tracking_on=True,
        )

        axis = np.linspace(-config.u_max, config.u_max, grid_points)
        hinge_best = np.inf
        oracle_best = np.inf
        for ux in axis:
            for uy in axis:
                u = np.array([ux, uy])
                hinge_val = problem.objective(u)

                # independent route: explicit candidate, margins, vertex slacks
                cand = np.empty(2)
                cand[0] = (
                    agent.model.process[0, 0] * agent.position[0]
                    + agent.model.process[0, 1] * agent.position[1]
                    + agent.model.control[0, 0] * ux
                    + agent.model.control[0, 1] * uy
                )
                cand[1] = (
                    agent.model.process[1, 0] * agent.position[0]
                    + agent.model.process[1, 1] * agent.position[1]
                    + agent.model.control[1, 0] * ux
                    + agent.model.control[1, 1] * uy
                )
                val = 0.0
                if config.w1 > 0.0:
                    val += config.w1 * tracking_objective(
                        cand.reshape(1, 2), [estimate], [agent.sensor],
                        objective_kind=config.objective_kind,
                        assignment=[{0}], standoff=config.standoff,
                    )
                val += config.w2 * math.sqrt(ux * ux + uy * uy)
                for zone in sensing_zones:
                    g = zones.sensing_margin(cand, zone, config.eps1)
                    val += config.w3 * _vertex_slack(g)
                for zone in comm_zones:
                    g = zones.comm_margin(cand, zone, 0.0, config.eps2)
                    val += config.w4 * _vertex_slack(g)

                diff = abs(val - hinge_val)
                worst = max(worst, diff)
                if diff > 1e-12:
                    return CheckResult(
                        "slack-equivalence", False,
                        f"instance {inst}: joint vs hinge objective differ by {diff:.3e} at u={u}",
                    )
                hinge_best = min(hinge_best, hinge_val)
                oracle_best = min(oracle_best, val)
        if abs(hinge_best - oracle_best) > 1e-12:
            return CheckResult(
                "slack-equivalence", False,
                f"instance {inst}: grid optima differ by {abs(hinge_best - oracle_best):.3e}",
            )
    return CheckResult(
        "slack-equivalence", True,
        f"{n_instances} instances, worst pointwise deviation {worst:.3e}",
    )
