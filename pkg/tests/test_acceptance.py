"""Acceptance suite: one test per release criterion, with stated tolerances.

Each test prints a single PASS/FAIL line (visible with `pytest -s` or in
failure output) and enforces its runtime budget.
"""

import math
import time

import numpy as np
import pytest
import scipy.optimize
import scipy.special

from conftest import random_spd
from rtsim.cli import main as cli_main
from rtsim.config import load_scenario
from rtsim.estimation import (
    SensorModel,
    TargetEstimate,
    covariance_intersection,
    ekf_update,
    measure,
)
from rtsim.sim import compute_metrics, run
from rtsim.validate import chance_constraint_check, slack_equivalence_check


def _report(name, ok, detail=""):
    print(f"ACCEPTANCE {'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, f"{name}: {detail}"


def test_chance_constraint_validity():
    """20 random isotropic zones, eps in {0.05, 0.1, 0.2}, points at margin 0:
    MC membership with 1e5 samples never exceeds eps + 0.01; < 30 s."""
    start = time.perf_counter()
    result = chance_constraint_check(seed=0, n_zones=20, eps_levels=(0.05, 0.1, 0.2),
                                     n_samples=100_000)
    elapsed = time.perf_counter() - start
    _report(
        "chance-constraint-validity",
        result.passed and elapsed < 30.0,
        f"{result.detail}; runtime {elapsed:.1f}s (budget 30s)",
    )


def test_slack_equivalence():
    """100 random single-robot instances, 21-point control grids: brute-force
    joint (u, nu, xi) minimization equals the hinge objective to 1e-12; < 60 s."""
    start = time.perf_counter()
    result = slack_equivalence_check(seed=0, n_instances=100, grid_points=21)
    elapsed = time.perf_counter() - start
    _report(
        "slack-equivalence",
        result.passed and elapsed < 60.0,
        f"{result.detail}; runtime {elapsed:.1f}s (budget 60s)",
    )


def test_slack_inner_lp_spot_checks():
    """Independent LP route: scipy.linprog on the inner slack minimization
    agrees with the closed-form hinge on random margins."""
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(40):
        g = float(rng.uniform(-1.5, 1.5))
        w = float(rng.uniform(0.0, 8.0))
        res = scipy.optimize.linprog(c=[w], A_ub=[[-1.0]], b_ub=[g], bounds=[(0.0, None)])
        assert res.success
        worst = max(worst, abs(res.fun - w * max(0.0, -g)))
    _report("slack-inner-lp-spot-check", worst <= 1e-10, f"worst LP deviation {worst:.2e}")


def test_covariance_intersection_properties(rng):
    """1000 random SPD pairs: merged trace <= min input trace + 1e-9 and
    order-swap equivalence within 1e-9."""
    worst_excess = -np.inf
    worst_swap = 0.0
    for _ in range(1000):
        a = TargetEstimate(rng.uniform(-3, 3, 2), random_spd(rng, rng.uniform(0.05, 2.0)))
        b = TargetEstimate(rng.uniform(-3, 3, 2), random_spd(rng, rng.uniform(0.05, 2.0)))
        m_ab, _ = covariance_intersection(a, b)
        m_ba, _ = covariance_intersection(b, a)
        worst_excess = max(worst_excess, m_ab.trace - min(a.trace, b.trace))
        worst_swap = max(
            worst_swap,
            float(np.abs(m_ab.cov - m_ba.cov).max()),
            float(np.abs(m_ab.mean - m_ba.mean).max()),
        )
    ok = worst_excess <= 1e-9 and worst_swap <= 1e-9
    _report(
        "covariance-intersection-properties", ok,
        f"worst trace excess {worst_excess:.2e}, worst swap diff {worst_swap:.2e}",
    )


def test_ekf_sanity():
    """Stationary target, Q=0, two static non-collinear observers with
    sigma_r = sigma_theta = 1e-3: error < 5e-3 m, trace non-increasing."""
    rng = np.random.default_rng(11)
    true_pos = np.array([1.0, 1.0])
    robots = [np.array([0.0, 0.0]), np.array([0.0, 2.0])]
    sensor = SensorModel(range_std=1e-3, bearing_std=1e-3)
    est = TargetEstimate([1.2, 0.85], 0.2 * np.eye(2))
    traces = [est.trace]
    for _ in range(200):
        obs = [(robot, *measure(robot, true_pos, sensor, rng), sensor) for robot in robots]
        est, skipped = ekf_update(est, obs)
        assert skipped == 0
        traces.append(est.trace)
    error = float(np.linalg.norm(est.mean - true_pos))
    monotone = bool(np.all(np.diff(traces) <= 1e-12))
    _report(
        "ekf-sanity", error < 5e-3 and monotone,
        f"final error {error:.2e} m (tol 5e-3), trace monotone: {monotone}",
    )


def test_fig4_reproduction_scaled():
    """fig4_sensing, seeds 0-9, resilient vs vanilla: (a) resilient mean
    final-window MSE < vanilla's; (b) vanilla runs that end fully
    sensing-lost have non-decreasing trace from the last loss; (c) every
    resilient run logs at least one recovery. Budget 2 min."""
    start = time.perf_counter()
    metrics = {}
    for mode in ("resilient", "vanilla"):
        metrics[mode] = [
            compute_metrics(run(load_scenario("fig4_sensing", seed=seed, mode=mode)))
            for seed in range(10)
        ]
    elapsed = time.perf_counter() - start

    res_mse = np.mean([m.mse_final_mean for m in metrics["resilient"]])
    van_mse = np.mean([m.mse_final_mean for m in metrics["vanilla"]])
    a_ok = res_mse < van_mse

    lost_runs = [m for m in metrics["vanilla"] if m.ends_all_sensing_lost]
    b_ok = all(m.trace_monotone_after_loss for m in lost_runs)

    c_ok = all(m.n_recoveries >= 1 for m in metrics["resilient"])

    _report(
        "fig4-reproduction", a_ok and b_ok and c_ok and elapsed < 120.0,
        f"(a) MSE {res_mse:.4f} < {van_mse:.4f}: {a_ok}; "
        f"(b) {len(lost_runs)} fully-lost vanilla runs all trace-monotone: {b_ok}; "
        f"(c) min recoveries {min(m.n_recoveries for m in metrics['resilient'])}: {c_ok}; "
        f"runtime {elapsed:.1f}s (budget 120s)",
    )


def test_fig9_reproduction_scaled():
    """fig9_benchmark, seeds 0-9: resilient end-of-run shared-knowledge count
    strictly exceeds individual mode's (which is 0), and resilient mean
    final-window trace <= individual's. Budget 2 min."""
    start = time.perf_counter()
    metrics = {}
    for mode in ("resilient", "individual"):
        metrics[mode] = [
            compute_metrics(run(load_scenario("fig9_benchmark", seed=seed, mode=mode)))
            for seed in range(10)
        ]
    elapsed = time.perf_counter() - start

    ind_shared = [m.shared_final for m in metrics["individual"]]
    res_shared = [m.shared_final for m in metrics["resilient"]]
    shared_ok = all(s == 0 for s in ind_shared) and all(
        r > i for r, i in zip(res_shared, ind_shared)
    )

    res_trace = np.mean([m.trace_final_mean for m in metrics["resilient"]])
    ind_trace = np.mean([m.trace_final_mean for m in metrics["individual"]])
    trace_ok = res_trace <= ind_trace

    _report(
        "fig9-reproduction", shared_ok and trace_ok and elapsed < 120.0,
        f"shared resilient {res_shared} vs individual {ind_shared}: {shared_ok}; "
        f"trace {res_trace:.6f} <= {ind_trace:.6f}: {trace_ok}; "
        f"runtime {elapsed:.1f}s (budget 120s)",
    )


def test_determinism_byte_identical(tmp_path):
    """Two CLI runs of fig7_combined seed 3 produce byte-identical
    steps.csv and events.csv."""
    dirs = [tmp_path / "a", tmp_path / "b"]
    for d in dirs:
        code = cli_main([
            "run", "--scenario", "fig7_combined.toml", "--seed", "3", "--out", str(d),
        ])
        assert code == 0
    steps_same = (dirs[0] / "steps.csv").read_bytes() == (dirs[1] / "steps.csv").read_bytes()
    events_same = (dirs[0] / "events.csv").read_bytes() == (dirs[1] / "events.csv").read_bytes()
    _report(
        "determinism-byte-identical", steps_same and events_same,
        f"steps.csv identical: {steps_same}, events.csv identical: {events_same}",
    )
