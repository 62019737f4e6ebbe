"""Scenario configuration: TOML loading, validation, resolved-config export.

Unknown keys are rejected so typos fail loudly; every error names the
offending field.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from .dynamics import AgentModel, TargetPolicy
from .estimation import SensorModel
from .planner import PlannerConfig
from .zones import CommZone, SensingZone

MODES = ("resilient", "vanilla", "individual")

SCENARIO_DIR = Path(__file__).parent / "scenarios"


class ConfigError(ValueError):
    """Scenario validation failure; `field` names the offending key."""

    def __init__(self, field_name, message):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


def _require(table, key, where, types):
    if key not in table:
        raise ConfigError(f"{where}.{key}", "missing required key")
    value = table[key]
    if not isinstance(value, types):
        raise ConfigError(f"{where}.{key}", f"expected {types}, got {type(value).__name__}")
    return value


def _optional(table, key, default, types, where):
    if key not in table:
        return default
    value = table[key]
    if not isinstance(value, types):
        raise ConfigError(f"{where}.{key}", f"expected {types}, got {type(value).__name__}")
    return value


def _reject_unknown(table, allowed, where):
    for key in table:
        if key not in allowed:
            raise ConfigError(f"{where}.{key}", "unknown key")


def _vec2(value, where):
    if not (isinstance(value, list) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value)):
        raise ConfigError(where, "expected a 2-element number list")
    return np.array(value, dtype=float)


def _cov2(value, where):
    """Scalar covariances are read as isotropic 2x2 matrices."""
    if isinstance(value, (int, float)):
        if value <= 0:
            raise ConfigError(where, "scalar covariance must be > 0")
        return float(value) * np.eye(2)
    if isinstance(value, list) and len(value) == 2:
        try:
            mat = np.array(value, dtype=float).reshape(2, 2)
        except (ValueError, TypeError):
            raise ConfigError(where, "expected scalar or 2x2 matrix") from None
        return mat
    raise ConfigError(where, "expected scalar or 2x2 matrix")


@dataclass
class RobotSpec:
    start: np.ndarray
    model: AgentModel
    sensor: SensorModel
    assigned: tuple


@dataclass
class TargetSpec:
    start: np.ndarray
    model: AgentModel
    policy: TargetPolicy


@dataclass
class ScenarioConfig:
    name: str
    dt: float
    max_steps: int
    seed: int
    mode: str
    delta1: float
    planner: PlannerConfig
    q_scale: float
    init_cov: float
    init_offset: np.ndarray
    robots: list
    targets: list
    sensing_zones: list
    comm_zones: list
    raw: dict = field(repr=False, default_factory=dict)

    def resolved_dict(self):
        """Fully resolved config for meta.json (plain JSON types only)."""
        return {
            "name": self.name,
            "dt": self.dt,
            "max_steps": self.max_steps,
            "seed": self.seed,
            "mode": self.mode,
            "delta1": self.delta1,
            "planner": {
                "w1": self.planner.w1, "w2": self.planner.w2,
                "w3": self.planner.w3, "w4": self.planner.w4,
                "eps1": self.planner.eps1, "eps2": self.planner.eps2,
                "u_max": self.planner.u_max, "solver": self.planner.solver,
                "grid_points": self.planner.grid_points,
                "grid_rounds": self.planner.grid_rounds,
                "objective": self.planner.objective_kind,
                "standoff": self.planner.standoff,
                "escape_inside_boost": self.planner.escape_inside_boost,
            },
            "estimation": {
                "q": self.q_scale,
                "init_cov": self.init_cov,
                "init_offset": self.init_offset.tolist(),
            },
            "robots": [
                {
                    "start": r.start.tolist(),
                    "u_max": r.model.u_max,
                    "targets": list(r.assigned),
                    "range_std": r.sensor.range_std,
                    "bearing_std": r.sensor.bearing_std,
                }
                for r in self.robots
            ],
            "targets": [
                {
                    "start": t.start.tolist(),
                    "policy": t.policy.kind,
                    "u_max": t.model.u_max,
                }
                for t in self.targets
            ],
            "sensing_zones": [
                {
                    "id": z.id, "mu": z.mu.tolist(), "sigma": z.sigma.tolist(),
                    "radius": z.radius, "attack_freq": z.attack_freq,
                    "eps_recover": z.eps_recover,
                }
                for z in self.sensing_zones
            ],
            "comm_zones": [
                {
                    "id": z.id, "mu": z.mu.tolist(), "sigma": z.sigma.tolist(),
                    "delta2": z.delta2, "attack_freq": z.attack_freq,
                    "eps_recover": z.eps_recover,
                }
                for z in self.comm_zones
            ],
        }


_TOP_KEYS = {
    "name", "dt", "max_steps", "seed", "mode", "delta1",
    "planner", "estimation", "robots", "targets", "sensing_zones", "comm_zones",
}
_PLANNER_KEYS = {
    "w1", "w2", "w3", "w4", "eps1", "eps2", "u_max", "solver",
    "grid_points", "grid_rounds", "objective", "standoff", "escape_inside_boost",
}
_EST_KEYS = {"q", "range_std", "bearing_std", "init_cov", "init_offset"}
_ROBOT_KEYS = {"start", "u_max", "targets", "process", "control", "range_std", "bearing_std"}
_TARGET_KEYS = {"start", "policy", "waypoints", "capture_radius", "speed", "value", "controls", "u_max"}
_SZONE_KEYS = {"mu", "cov", "radius", "attack_freq", "eps_recover"}
_CZONE_KEYS = {"mu", "cov", "delta2", "attack_freq", "eps_recover"}


def parse_scenario(data: dict, name="scenario"):
    """Validate a parsed TOML document into a ScenarioConfig."""
    _reject_unknown(data, _TOP_KEYS, name)
    dt = float(_require(data, "dt", name, (int, float)))
    if dt <= 0:
        raise ConfigError(f"{name}.dt", "must be > 0")
    max_steps = _require(data, "max_steps", name, int)
    if max_steps < 1:
        raise ConfigError(f"{name}.max_steps", "must be >= 1")
    seed = _optional(data, "seed", 0, int, name)
    mode = _optional(data, "mode", "resilient", str, name)
    if mode not in MODES:
        raise ConfigError(f"{name}.mode", f"must be one of {MODES}")
    delta1 = float(_optional(data, "delta1", 1.0, (int, float), name))
    if delta1 < 0:
        raise ConfigError(f"{name}.delta1", "must be >= 0")
    scenario_name = _optional(data, "name", name, str, name)

    ptab = _optional(data, "planner", {}, dict, name)
    _reject_unknown(ptab, _PLANNER_KEYS, f"{name}.planner")
    try:
        planner = PlannerConfig(
            w1=float(_optional(ptab, "w1", 1.0, (int, float), f"{name}.planner")),
            w2=float(_optional(ptab, "w2", 0.01, (int, float), f"{name}.planner")),
            w3=float(_optional(ptab, "w3", 5.0, (int, float), f"{name}.planner")),
            w4=float(_optional(ptab, "w4", 5.0, (int, float), f"{name}.planner")),
            eps1=float(_optional(ptab, "eps1", 0.05, (int, float), f"{name}.planner")),
            eps2=float(_optional(ptab, "eps2", 0.05, (int, float), f"{name}.planner")),
            u_max=float(_optional(ptab, "u_max", 1.0, (int, float), f"{name}.planner")),
            solver=_optional(ptab, "solver", "grid-refine", str, f"{name}.planner"),
            grid_points=_optional(ptab, "grid_points", 17, int, f"{name}.planner"),
            grid_rounds=_optional(ptab, "grid_rounds", 3, int, f"{name}.planner"),
            objective_kind=_optional(ptab, "objective", "trace-predicted", str, f"{name}.planner"),
            standoff=float(_optional(ptab, "standoff", 0.4, (int, float), f"{name}.planner")),
            escape_inside_boost=float(
                _optional(ptab, "escape_inside_boost", 2.0, (int, float), f"{name}.planner")
            ),
        )
    except ValueError as exc:
        raise ConfigError(f"{name}.planner", str(exc)) from None

    etab = _optional(data, "estimation", {}, dict, name)
    _reject_unknown(etab, _EST_KEYS, f"{name}.estimation")
    q_scale = float(_optional(etab, "q", 1e-4, (int, float), f"{name}.estimation"))
    range_std = float(_optional(etab, "range_std", 0.05, (int, float), f"{name}.estimation"))
    bearing_std = float(_optional(etab, "bearing_std", 0.05, (int, float), f"{name}.estimation"))
    init_cov = float(_optional(etab, "init_cov", 0.2, (int, float), f"{name}.estimation"))
    init_offset = _vec2(
        _optional(etab, "init_offset", [0.3, -0.3], list, f"{name}.estimation"),
        f"{name}.estimation.init_offset",
    )
    if q_scale < 0:
        raise ConfigError(f"{name}.estimation.q", "must be >= 0")
    if init_cov <= 0:
        raise ConfigError(f"{name}.estimation.init_cov", "must be > 0")

    target_tables = _require(data, "targets", name, list)
    if not target_tables:
        raise ConfigError(f"{name}.targets", "need at least one target")
    robot_tables = _require(data, "robots", name, list)
    if not robot_tables:
        raise ConfigError(f"{name}.robots", "need at least one robot")

    targets = []
    for j, ttab in enumerate(target_tables):
        where = f"{name}.targets[{j}]"
        _reject_unknown(ttab, _TARGET_KEYS, where)
        start = _vec2(_require(ttab, "start", where, list), f"{where}.start")
        kind = _optional(ttab, "policy", "waypoint-cycle", str, where)
        speed = float(_optional(ttab, "speed", 0.3, (int, float), where))
        u_max = float(_optional(ttab, "u_max", max(speed, 1e-9), (int, float), where))
        try:
            if kind == "waypoint-cycle":
                policy = TargetPolicy(
                    kind=kind,
                    waypoints=_require(ttab, "waypoints", where, list),
                    capture_radius=float(_optional(ttab, "capture_radius", 0.1, (int, float), where)),
                    speed=speed,
                )
            elif kind == "constant-control":
                policy = TargetPolicy(kind=kind, value=_require(ttab, "value", where, list))
            elif kind == "scripted-sequence":
                policy = TargetPolicy(kind=kind, controls=_require(ttab, "controls", where, list))
            else:
                raise ConfigError(f"{where}.policy", f"unknown policy {kind!r}")
            model = AgentModel.single_integrator(dt, u_max)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(where, str(exc)) from None
        targets.append(TargetSpec(start=start, model=model, policy=policy))

    robots = []
    covered = set()
    for i, rtab in enumerate(robot_tables):
        where = f"{name}.robots[{i}]"
        _reject_unknown(rtab, _ROBOT_KEYS, where)
        start = _vec2(_require(rtab, "start", where, list), f"{where}.start")
        u_max = float(_optional(rtab, "u_max", planner.u_max, (int, float), where))
        assigned = _optional(rtab, "targets", list(range(len(targets))), list, where)
        for j in assigned:
            if not isinstance(j, int) or not 0 <= j < len(targets):
                raise ConfigError(f"{where}.targets", f"invalid target index {j!r}")
        covered.update(assigned)
        process = rtab.get("process")
        control = rtab.get("control")
        try:
            if process is None and control is None:
                model = AgentModel.single_integrator(dt, u_max)
            else:
                model = AgentModel(
                    process=np.eye(2) if process is None else np.array(process, dtype=float),
                    control=dt * np.eye(2) if control is None else np.array(control, dtype=float),
                    u_max=u_max,
                )
            sensor = SensorModel(
                range_std=float(_optional(rtab, "range_std", range_std, (int, float), where)),
                bearing_std=float(_optional(rtab, "bearing_std", bearing_std, (int, float), where)),
            )
        except ValueError as exc:
            raise ConfigError(where, str(exc)) from None
        robots.append(RobotSpec(start=start, model=model, sensor=sensor, assigned=tuple(assigned)))

    if covered != set(range(len(targets))):
        missing = sorted(set(range(len(targets))) - covered)
        raise ConfigError(f"{name}.robots", f"assignment lists do not cover targets {missing}")

    sensing_zones = []
    for l, ztab in enumerate(_optional(data, "sensing_zones", [], list, name)):
        where = f"{name}.sensing_zones[{l}]"
        _reject_unknown(ztab, _SZONE_KEYS, where)
        try:
            sensing_zones.append(
                SensingZone(
                    id=l,
                    mu=_vec2(_require(ztab, "mu", where, list), f"{where}.mu"),
                    sigma=_cov2(_require(ztab, "cov", where, (int, float, list)), f"{where}.cov"),
                    radius=float(_require(ztab, "radius", where, (int, float))),
                    attack_freq=float(_optional(ztab, "attack_freq", 1.0, (int, float), where)),
                    eps_recover=float(_optional(ztab, "eps_recover", 0.1, (int, float), where)),
                )
            )
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(where, str(exc)) from None

    comm_zones = []
    n_sensing = len(sensing_zones)
    for k, ztab in enumerate(_optional(data, "comm_zones", [], list, name)):
        where = f"{name}.comm_zones[{k}]"
        _reject_unknown(ztab, _CZONE_KEYS, where)
        try:
            comm_zones.append(
                CommZone(
                    id=n_sensing + k,
                    mu=_vec2(_require(ztab, "mu", where, list), f"{where}.mu"),
                    sigma=_cov2(_require(ztab, "cov", where, (int, float, list)), f"{where}.cov"),
                    delta2=float(_require(ztab, "delta2", where, (int, float))),
                    attack_freq=float(_optional(ztab, "attack_freq", 1.0, (int, float), where)),
                    eps_recover=float(_optional(ztab, "eps_recover", 0.1, (int, float), where)),
                )
            )
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(where, str(exc)) from None

    return ScenarioConfig(
        name=scenario_name,
        dt=dt,
        max_steps=max_steps,
        seed=seed,
        mode=mode,
        delta1=delta1,
        planner=planner,
        q_scale=q_scale,
        init_cov=init_cov,
        init_offset=init_offset,
        robots=robots,
        targets=targets,
        sensing_zones=sensing_zones,
        comm_zones=comm_zones,
        raw=data,
    )


def load_scenario(path, seed=None, mode=None, max_steps=None):
    """Load a scenario TOML by filesystem path or bundled scenario name."""
    candidate = Path(path)
    if not candidate.exists():
        bundled = SCENARIO_DIR / candidate.name
        if not bundled.exists() and not candidate.name.endswith(".toml"):
            bundled = SCENARIO_DIR / f"{candidate.name}.toml"
        if bundled.exists():
            candidate = bundled
        else:
            raise FileNotFoundError(f"scenario not found: {path}")
    with open(candidate, "rb") as fh:
        data = tomllib.load(fh)
    config = parse_scenario(data, name=candidate.stem)
    if seed is not None:
        config.seed = int(seed)
    if mode is not None:
        if mode not in MODES:
            raise ConfigError("mode", f"must be one of {MODES}")
        config.mode = mode
    if max_steps is not None:
        if max_steps < 1:
            raise ConfigError("max_steps", "must be >= 1")
        config.max_steps = int(max_steps)
    return config
