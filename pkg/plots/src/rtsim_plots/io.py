"""Readers and pre-render assertions for the rts-log-v1 file contract.

All numeric/schema checks happen here, before any rendering; input files are
never written to.
"""

import csv
import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import SCHEMA_VERSION


class SchemaError(RuntimeError):
    """Input files do not satisfy the rts-log-v1 contract."""


@dataclass
class StepsTable:
    n_robots: int
    n_targets: int
    steps: np.ndarray          # (T,)
    robot_xy: np.ndarray       # (T, M, 2)
    sensing_ok: np.ndarray     # (T, M)
    comm_ok: np.ndarray        # (T, M)
    target_xy: np.ndarray      # (T, N, 2)
    mse: np.ndarray
    total_trace: np.ndarray


@dataclass
class EventsTable:
    step: np.ndarray
    robot: np.ndarray
    zone: np.ndarray
    kind: list
    recovered_at: list


@dataclass
class AggregateTable:
    label: str
    steps: np.ndarray
    mse_mean: np.ndarray
    mse_std: np.ndarray
    trace_mean: np.ndarray
    trace_std: np.ndarray


def load_meta(path):
    meta = json.loads(Path(path).read_text())
    if meta.get("schema") != SCHEMA_VERSION:
        raise SchemaError(
            f"{path}: schema {meta.get('schema')!r} != {SCHEMA_VERSION!r}"
        )
    return meta


def load_steps(path):
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"{path}: missing steps file")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader]
    robot_ids = sorted(
        {int(m.group(1)) for col in header if (m := re.fullmatch(r"r(\d+)_x", col))}
    )
    target_ids = sorted(
        {int(m.group(1)) for col in header if (m := re.fullmatch(r"t(\d+)_x", col))}
    )
    if not robot_ids or not target_ids:
        raise SchemaError(f"{path}: header does not look like an rts-log-v1 steps.csv")
    idx = {col: i for i, col in enumerate(header)}
    required = ["step", "t", "mse", "total_trace"]
    for col in required:
        if col not in idx:
            raise SchemaError(f"{path}: missing column {col!r}")
    data = np.array(rows, dtype=object)
    m, n, t = len(robot_ids), len(target_ids), len(rows)

    def col(name):
        return data[:, idx[name]].astype(float)

    robot_xy = np.stack(
        [np.stack([col(f"r{i}_x"), col(f"r{i}_y")], axis=1) for i in robot_ids], axis=1
    ) if t else np.zeros((0, m, 2))
    target_xy = np.stack(
        [np.stack([col(f"t{j}_x"), col(f"t{j}_y")], axis=1) for j in target_ids], axis=1
    ) if t else np.zeros((0, n, 2))
    sensing = np.stack([col(f"r{i}_sensing_ok") for i in robot_ids], axis=1).astype(bool)
    comm = np.stack([col(f"r{i}_comm_ok") for i in robot_ids], axis=1).astype(bool)
    return StepsTable(
        n_robots=m,
        n_targets=n,
        steps=col("step").astype(int),
        robot_xy=robot_xy,
        sensing_ok=sensing,
        comm_ok=comm,
        target_xy=target_xy,
        mse=col("mse"),
        total_trace=col("total_trace"),
    )


def load_events(path):
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"{path}: missing events file")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["step", "robot", "zone", "kind", "recovered_at"]:
            raise SchemaError(f"{path}: unexpected events header {header}")
        rows = list(reader)
    return EventsTable(
        step=np.array([int(r[0]) for r in rows], dtype=int),
        robot=np.array([int(r[1]) for r in rows], dtype=int),
        zone=np.array([int(r[2]) for r in rows], dtype=int),
        kind=[r[3] for r in rows],
        recovered_at=[int(r[4]) if r[4] else None for r in rows],
    )


def load_aggregate(path, label):
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"{path}: missing aggregate file")
    lines = path.read_text().strip().split("\n")
    if not lines or lines[0].strip() != f"# schema={SCHEMA_VERSION}":
        raise SchemaError(f"{path}: aggregate does not declare schema {SCHEMA_VERSION}")
    reader = csv.reader(lines[1:])
    header = next(reader)
    if header != ["step", "mse_mean", "mse_std", "trace_mean", "trace_std"]:
        raise SchemaError(f"{path}: unexpected aggregate header {header}")
    rows = np.array(list(reader), dtype=float)
    if rows.size == 0:
        raise SchemaError(f"{path}: empty aggregate")
    return AggregateTable(
        label=label,
        steps=rows[:, 0].astype(int),
        mse_mean=rows[:, 1],
        mse_std=rows[:, 2],
        trace_mean=rows[:, 3],
        trace_std=rows[:, 4],
    )


def assert_step_alignment(aggregates):
    """All compared aggregates must cover identical step grids."""
    first = aggregates[0]
    for agg in aggregates[1:]:
        if len(agg.steps) != len(first.steps) or not np.array_equal(agg.steps, first.steps):
            raise SchemaError(
                f"step grids differ between {first.label!r} ({len(first.steps)}) "
                f"and {agg.label!r} ({len(agg.steps)})"
            )


def assert_summary_flags(summary_path, labels):
    """Check compare-run diagnostic flags for the plotted modes.

    A mode that ended fully sensing-lost in some run must carry a true
    trace-monotonicity flag; False means the exported data is inconsistent
    and plotting aborts.
    """
    summary = json.loads(Path(summary_path).read_text())
    if summary.get("schema") != SCHEMA_VERSION:
        raise SchemaError(f"{summary_path}: schema mismatch")
    checked = {}
    for label in labels:
        mode = summary.get("modes", {}).get(label)
        if mode is None:
            continue
        flag = mode.get("trace_monotone_after_full_loss")
        if flag is False:
            raise SchemaError(
                f"{summary_path}: mode {label!r} has non-monotone trace after full "
                "sensing loss; refusing to plot inconsistent data"
            )
        checked[label] = flag
    return checked
