"""Discrete-time linear dynamics for robots and targets, plus target policies."""

from dataclasses import dataclass, field

import numpy as np

_CONTROL_TOL = 1e-9


@dataclass(frozen=True)
class AgentModel:
    """Linear agent: x' = process @ x + control @ u, |u| bounded component-wise."""

    process: np.ndarray
    control: np.ndarray
    u_max: float

    def __post_init__(self):
        process = np.asarray(self.process, dtype=float).reshape(2, 2)
        control = np.asarray(self.control, dtype=float).reshape(2, 2)
        object.__setattr__(self, "process", process)
        object.__setattr__(self, "control", control)
        if not (np.isfinite(process).all() and np.isfinite(control).all()):
            raise ValueError("agent model matrices must be finite")
        if not (np.isfinite(self.u_max) and self.u_max >= 0.0):
            raise ValueError("u_max must be finite and >= 0")

    @classmethod
    def single_integrator(cls, dt, u_max):
        """Default model: identity process, control scaled by the sampling time."""
        return cls(process=np.eye(2), control=dt * np.eye(2), u_max=float(u_max))


@dataclass
class TargetPolicy:
    """Scenario-configured target control law.

    kind: "constant-control" (fixed value), "waypoint-cycle" (steer toward
    the active waypoint at full speed, advancing within capture_radius) or
    "scripted-sequence" (per-step list, holding the last entry).
    """

    kind: str
    value: np.ndarray | None = None
    waypoints: np.ndarray | None = None
    capture_radius: float = 0.1
    speed: float = 0.0
    controls: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("constant-control", "waypoint-cycle", "scripted-sequence"):
            raise ValueError(f"unknown target policy kind: {self.kind!r}")
        if self.kind == "constant-control":
            self.value = np.asarray(self.value, dtype=float).reshape(2)
        elif self.kind == "waypoint-cycle":
            self.waypoints = np.atleast_2d(np.asarray(self.waypoints, dtype=float))
            if self.waypoints.shape[0] < 1 or self.waypoints.shape[1] != 2:
                raise ValueError("waypoint-cycle requires at least one 2-D waypoint")
        else:
            self.controls = np.atleast_2d(np.asarray(self.controls, dtype=float))
            if self.controls.shape[0] < 1 or self.controls.shape[1] != 2:
                raise ValueError("scripted-sequence requires at least one 2-D control")


def step_agent(x, u, model: AgentModel):
    """Advance one step: process @ x + control @ u.

    Controls are the planner's responsibility; anything beyond u_max
    (component-wise) is a contract violation and raises.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if not np.isfinite(x).all():
        raise ValueError("state must be finite")
    if np.any(np.abs(u) > model.u_max + _CONTROL_TOL):
        raise ValueError(
            f"control {u} exceeds u_max={model.u_max}; planner must clamp first"
        )
    return model.process @ x + model.control @ u


def target_control(policy: TargetPolicy, x, t, waypoint_index=0):
    """Control for a target at step t, plus the (possibly advanced) waypoint cursor.

    The cursor is threaded through by the caller so the function itself stays
    pure; it is only meaningful for waypoint-cycle policies.
    """
    if t < 0:
        raise ValueError("step index must be >= 0")
    if policy.kind == "constant-control":
        return policy.value.copy(), waypoint_index
    if policy.kind == "scripted-sequence":
        idx = min(int(t), policy.controls.shape[0] - 1)
        return policy.controls[idx].copy(), waypoint_index
    # waypoint-cycle
    x = np.asarray(x, dtype=float)
    n_wp = policy.waypoints.shape[0]
    idx = waypoint_index % n_wp
    if np.linalg.norm(policy.waypoints[idx] - x) <= policy.capture_radius:
        idx = (idx + 1) % n_wp
    delta = policy.waypoints[idx] - x
    dist = np.linalg.norm(delta)
    if dist < 1e-12:
        return np.zeros(2), idx
    return (policy.speed / dist) * delta, idx
