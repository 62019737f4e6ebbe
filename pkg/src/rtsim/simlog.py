"""Simulation log: per-step records, attack events, CSV/JSON export.

steps.csv serializes floats with 9 significant digits; the JSON document
keeps full precision and round-trips exactly.
"""

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .attacks import AttackEvent

SCHEMA_VERSION = "rts-log-v1"


def _fmt(x):
    return format(float(x), ".9g")


@dataclass
class StepRecord:
    step: int
    t: float
    robot_xy: np.ndarray       # (M, 2)
    sensing_ok: np.ndarray     # (M,) bool
    comm_ok: np.ndarray        # (M,) bool
    controls: np.ndarray       # (M, 2)
    target_xy: np.ndarray      # (N, 2)
    bank_means: np.ndarray     # (M+1, N, 2): group bank first, then per robot
    bank_traces: np.ndarray    # (M+1, N)
    slacks_nu: list            # [robot, zone, value] triples
    slacks_xi: list
    mse: float
    total_trace: float
    shared_sensing_count: int
    shared_comm_count: int

    def to_dict(self):
        return {
            "step": self.step,
            "t": self.t,
            "robot_xy": np.asarray(self.robot_xy).tolist(),
            "sensing_ok": [bool(v) for v in self.sensing_ok],
            "comm_ok": [bool(v) for v in self.comm_ok],
            "controls": np.asarray(self.controls).tolist(),
            "target_xy": np.asarray(self.target_xy).tolist(),
            "bank_means": np.asarray(self.bank_means).tolist(),
            "bank_traces": np.asarray(self.bank_traces).tolist(),
            "slacks_nu": [[int(r), int(z), float(v)] for r, z, v in self.slacks_nu],
            "slacks_xi": [[int(r), int(z), float(v)] for r, z, v in self.slacks_xi],
            "mse": self.mse,
            "total_trace": self.total_trace,
            "shared_sensing_count": self.shared_sensing_count,
            "shared_comm_count": self.shared_comm_count,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            step=d["step"],
            t=d["t"],
            robot_xy=np.array(d["robot_xy"], dtype=float),
            sensing_ok=np.array(d["sensing_ok"], dtype=bool),
            comm_ok=np.array(d["comm_ok"], dtype=bool),
            controls=np.array(d["controls"], dtype=float),
            target_xy=np.array(d["target_xy"], dtype=float),
            bank_means=np.array(d["bank_means"], dtype=float),
            bank_traces=np.array(d["bank_traces"], dtype=float),
            slacks_nu=[tuple(x) for x in d["slacks_nu"]],
            slacks_xi=[tuple(x) for x in d["slacks_xi"]],
            mse=d["mse"],
            total_trace=d["total_trace"],
            shared_sensing_count=d["shared_sensing_count"],
            shared_comm_count=d["shared_comm_count"],
        )


@dataclass
class SimLog:
    meta: dict
    steps: list = field(default_factory=list)
    events: list = field(default_factory=list)

    @property
    def n_robots(self):
        return len(self.meta["config"]["robots"])

    @property
    def n_targets(self):
        return len(self.meta["config"]["targets"])

    def to_dict(self):
        return {
            "meta": self.meta,
            "steps": [s.to_dict() for s in self.steps],
            "events": [
                {
                    "step": e.step, "robot": e.robot, "zone": e.zone,
                    "kind": e.kind, "recovered_at": e.recovered_at,
                }
                for e in self.events
            ],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            meta=d["meta"],
            steps=[StepRecord.from_dict(s) for s in d["steps"]],
            events=[
                AttackEvent(
                    step=e["step"], robot=e["robot"], zone=e["zone"],
                    kind=e["kind"], recovered_at=e["recovered_at"],
                )
                for e in d["events"]
            ],
        )


def build_tag(resolved_config, seed):
    """Deterministic build tag so repeated runs stay byte-identical."""
    digest = hashlib.sha1(
        json.dumps({"config": resolved_config, "seed": seed}, sort_keys=True).encode()
    ).hexdigest()[:8]
    return f"rtsim-0.1.0+{digest}"


def make_meta(resolved_config, seed):
    return {
        "schema": SCHEMA_VERSION,
        "seed": seed,
        "build_tag": build_tag(resolved_config, seed),
        "config": resolved_config,
    }


def steps_header(n_robots, n_targets):
    """The pinned steps.csv header for a given team size."""
    cols = ["step", "t"]
    for i in range(n_robots):
        cols += [
            f"r{i}_x", f"r{i}_y", f"r{i}_sensing_ok", f"r{i}_comm_ok",
            f"r{i}_u_x", f"r{i}_u_y",
        ]
    for j in range(n_targets):
        cols += [f"t{j}_x", f"t{j}_y"]
    banks = ["group"] + [f"r{i}" for i in range(n_robots)]
    for bank in banks:
        for j in range(n_targets):
            cols += [f"{bank}_t{j}_est_x", f"{bank}_t{j}_est_y", f"{bank}_t{j}_trace"]
    cols += ["mse", "total_trace", "shared_sensing_count", "shared_comm_count"]
    return cols


def export(log: SimLog, fmt, path):
    """Write the log as CSV bundle (steps/events/meta in a directory) or JSON.

    Returns the list of written paths.
    """
    if fmt == "json":
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            json.dump(log.to_dict(), fh)
            fh.write("\n")
        return [path]
    if fmt != "csv":
        raise ValueError(f"unknown export format: {fmt!r}")

    outdir = Path(path)
    outdir.mkdir(parents=True, exist_ok=True)
    steps_path = outdir / "steps.csv"
    events_path = outdir / "events.csv"
    meta_path = outdir / "meta.json"

    m, n = log.n_robots, log.n_targets
    with open(steps_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(steps_header(m, n))
        for rec in log.steps:
            row = [str(rec.step), _fmt(rec.t)]
            for i in range(m):
                row += [
                    _fmt(rec.robot_xy[i, 0]), _fmt(rec.robot_xy[i, 1]),
                    str(int(rec.sensing_ok[i])), str(int(rec.comm_ok[i])),
                    _fmt(rec.controls[i, 0]), _fmt(rec.controls[i, 1]),
                ]
            for j in range(n):
                row += [_fmt(rec.target_xy[j, 0]), _fmt(rec.target_xy[j, 1])]
            for b in range(m + 1):
                for j in range(n):
                    row += [
                        _fmt(rec.bank_means[b, j, 0]),
                        _fmt(rec.bank_means[b, j, 1]),
                        _fmt(rec.bank_traces[b, j]),
                    ]
            row += [
                _fmt(rec.mse), _fmt(rec.total_trace),
                str(rec.shared_sensing_count), str(rec.shared_comm_count),
            ]
            writer.writerow(row)

    with open(events_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "robot", "zone", "kind", "recovered_at"])
        for e in log.events:
            writer.writerow(
                [e.step, e.robot, e.zone, e.kind, "" if e.recovered_at is None else e.recovered_at]
            )

    with open(meta_path, "w") as fh:
        json.dump(log.meta, fh, indent=2, sort_keys=True)
        fh.write("\n")

    return [steps_path, events_path, meta_path]


def load_json(path):
    with open(path) as fh:
        return SimLog.from_dict(json.load(fh))
