"""Command-line interface: run, batch, compare, validate."""

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import sim, simlog
from .config import MODES, ConfigError, load_scenario
from .simlog import SCHEMA_VERSION

log = logging.getLogger("rtsim")

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging():
    level = os.environ.get("RTS_LOG_LEVEL", "error").strip().lower()
    if level not in _LOG_LEVELS:
        level = "error"
    logging.basicConfig(level=_LOG_LEVELS[level], format="%(levelname)s %(name)s: %(message)s")


def _check_overwrite(outdir: Path, force):
    marker = outdir / "steps.csv"
    if marker.exists() and not force:
        raise ConfigError("out", f"{marker} exists; pass --force to overwrite")


def _execute_run(args):
    """Worker: run one (scenario, seed, mode) and export its logs."""
    scenario_path, seed, mode, max_steps, outdir, write_json = args
    config = load_scenario(scenario_path, seed=seed, mode=mode, max_steps=max_steps)
    result = sim.run(config)
    outdir = Path(outdir)
    simlog.export(result, "csv", outdir)
    if write_json:
        simlog.export(result, "json", outdir / "log.json")
    metrics = sim.compute_metrics(result)
    return {
        "seed": seed,
        "mode": config.mode,
        "mse_final": metrics.mse_final_mean,
        "trace_final": metrics.trace_final_mean,
        "mse_series": metrics.mse_series.tolist(),
        "trace_series": metrics.trace_series.tolist(),
        "n_recoveries": metrics.n_recoveries,
        "shared_final": metrics.shared_final,
        "ends_all_sensing_lost": metrics.ends_all_sensing_lost,
        "trace_monotone_after_loss": metrics.trace_monotone_after_loss,
    }


def _result_line(summary):
    return (
        f"RESULT seed={summary['seed']} mode={summary['mode']} "
        f"mse_final={summary['mse_final']:.9g} trace_final={summary['trace_final']:.9g}"
    )


def _run_many(jobs, workers):
    if workers <= 1 or len(jobs) == 1:
        return [_execute_run(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_execute_run, jobs))


def _write_aggregate(path: Path, summaries):
    """Per-step mean/std of mse and total trace across seeds."""
    mse = np.array([s["mse_series"] for s in summaries])
    trace = np.array([s["trace_series"] for s in summaries])
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema={SCHEMA_VERSION}\n")
        writer = csv.writer(fh)
        writer.writerow(["step", "mse_mean", "mse_std", "trace_mean", "trace_std"])
        for i in range(mse.shape[1]):
            writer.writerow(
                [
                    i + 1,
                    format(mse[:, i].mean(), ".9g"),
                    format(mse[:, i].std(), ".9g"),
                    format(trace[:, i].mean(), ".9g"),
                    format(trace[:, i].std(), ".9g"),
                ]
            )


def _mode_summary(summaries):
    lost_runs = [s for s in summaries if s["ends_all_sensing_lost"]]
    monotone = None
    if lost_runs:
        monotone = all(s["trace_monotone_after_loss"] for s in lost_runs)
    return {
        "mse_final_mean": float(np.mean([s["mse_final"] for s in summaries])),
        "trace_final_mean": float(np.mean([s["trace_final"] for s in summaries])),
        "recoveries_total": int(sum(s["n_recoveries"] for s in summaries)),
        "shared_final_mean": float(np.mean([s["shared_final"] for s in summaries])),
        "shared_final_min": int(min(s["shared_final"] for s in summaries)),
        "all_sensing_lost_runs": len(lost_runs),
        "trace_monotone_after_full_loss": monotone,
    }


def cmd_run(args):
    outdir = Path(args.out)
    _check_overwrite(outdir, args.force)
    summary = _execute_run(
        (args.scenario, args.seed, args.mode, args.max_steps, outdir, True)
    )
    print(_result_line(summary))
    return 0


def cmd_batch(args):
    outroot = Path(args.out)
    jobs = []
    for seed in range(args.seed, args.seed + args.runs):
        outdir = outroot / f"seed{seed}"
        _check_overwrite(outdir, args.force)
        jobs.append((args.scenario, seed, args.mode, args.max_steps, outdir, False))
    summaries = _run_many(jobs, args.workers)
    summaries.sort(key=lambda s: s["seed"])
    for summary in summaries:
        print(_result_line(summary))
    outroot.mkdir(parents=True, exist_ok=True)
    _write_aggregate(outroot / "aggregate.csv", summaries)
    return 0


def cmd_compare(args):
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    if len(modes) < 2:
        raise ConfigError("modes", "need at least two comma-separated modes")
    for mode in modes:
        if mode not in MODES:
            raise ConfigError("modes", f"unknown mode {mode!r}")
    outroot = Path(args.out)
    per_mode = {}
    for mode in modes:
        jobs = []
        for seed in range(args.seed, args.seed + args.runs):
            outdir = outroot / mode / f"seed{seed}"
            _check_overwrite(outdir, args.force)
            jobs.append((args.scenario, seed, mode, args.max_steps, outdir, False))
        summaries = _run_many(jobs, args.workers)
        summaries.sort(key=lambda s: s["seed"])
        for summary in summaries:
            print(_result_line(summary))
        _write_aggregate(outroot / f"aggregate_{mode}.csv", summaries)
        per_mode[mode] = summaries

    summary_doc = {
        "schema": SCHEMA_VERSION,
        "scenario": Path(args.scenario).stem,
        "seeds": list(range(args.seed, args.seed + args.runs)),
        "modes": {mode: _mode_summary(per_mode[mode]) for mode in modes},
    }
    with open(outroot / "summary.json", "w") as fh:
        json.dump(summary_doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def cmd_validate(args):
    from .validate import chance_constraint_check, slack_equivalence_check

    results = [
        chance_constraint_check(seed=args.seed, n_samples=args.mc_samples),
        slack_equivalence_check(seed=args.seed, n_instances=args.instances),
    ]
    ok = True
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"{status} {res.name}: {res.detail}")
        ok &= res.passed
    return 0 if ok else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rtsim",
        description="Resilient multi-robot target tracking simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, batch=False):
        p.add_argument("--scenario", required=True, help="scenario TOML path or bundled name")
        p.add_argument("--seed", type=int, default=0, help="seed (start seed for batches)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--max-steps", type=int, default=None, help="override scenario step budget")
        p.add_argument("--force", action="store_true", help="overwrite existing logs")
        if batch:
            p.add_argument("--runs", type=int, default=10, help="number of seeds")
            p.add_argument(
                "--workers", type=int, default=min(4, os.cpu_count() or 1),
                help="parallel run workers",
            )

    p_run = sub.add_parser("run", help="run one simulation and export logs")
    add_common(p_run)
    p_run.add_argument("--mode", choices=MODES, default=None, help="override scenario mode")
    p_run.set_defaults(func=cmd_run)

    p_batch = sub.add_parser("batch", help="run a seed batch and aggregate metrics")
    add_common(p_batch, batch=True)
    p_batch.add_argument("--mode", choices=MODES, default=None, help="override scenario mode")
    p_batch.set_defaults(func=cmd_batch)

    p_cmp = sub.add_parser("compare", help="run the same scenario+seeds under several modes")
    add_common(p_cmp, batch=True)
    p_cmp.add_argument("--modes", default="resilient,vanilla", help="comma-separated modes")
    p_cmp.set_defaults(func=cmd_compare)

    p_val = sub.add_parser("validate", help="run the MC chance-constraint and slack checks")
    p_val.add_argument("--seed", type=int, default=0)
    p_val.add_argument("--mc-samples", type=int, default=100_000)
    p_val.add_argument("--instances", type=int, default=100)
    p_val.set_defaults(func=cmd_validate)

    return parser


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # internal failure
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
