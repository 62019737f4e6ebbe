"""Command-line entry points: plot-traj and plot-metrics."""

import argparse
import sys
from pathlib import Path

from .io import SchemaError
from .metrics import plot_metrics
from .traj import plot_trajectories


def main_traj(argv=None):
    parser = argparse.ArgumentParser(
        prog="plot-traj",
        description="Trajectory snapshots with zone overlays and attack markers",
    )
    parser.add_argument("--steps", required=True, help="steps.csv path")
    parser.add_argument("--events", required=True, help="events.csv path")
    parser.add_argument("--meta", default=None,
                        help="meta.json path (default: sibling of steps.csv)")
    parser.add_argument("--snapshots", default="100,200,300",
                        help="comma-separated snapshot steps")
    parser.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)

    meta = args.meta or str(Path(args.steps).parent / "meta.json")
    snapshots = [int(s) for s in args.snapshots.split(",") if s.strip()]
    try:
        out = plot_trajectories(args.steps, args.events, meta, snapshots, args.out)
    except (SchemaError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


def main_metrics(argv=None):
    parser = argparse.ArgumentParser(
        prog="plot-metrics",
        description="Mean +/- std comparison curves for MSE and covariance trace",
    )
    parser.add_argument("--aggregates", required=True,
                        help="comma-separated aggregate CSV paths")
    parser.add_argument("--labels", required=True, help="comma-separated mode labels")
    parser.add_argument("--summary", default=None,
                        help="summary.json with per-mode flags "
                             "(default: sibling of the first aggregate, if present)")
    parser.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)

    paths = [p.strip() for p in args.aggregates.split(",") if p.strip()]
    labels = [l.strip() for l in args.labels.split(",") if l.strip()]
    summary = args.summary
    if summary is None:
        candidate = Path(paths[0]).parent / "summary.json" if paths else None
        if candidate is not None and candidate.exists():
            summary = str(candidate)
    try:
        out = plot_metrics(paths, labels, args.out, summary_path=summary)
    except (SchemaError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main_traj())
