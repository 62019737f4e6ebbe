"""Benchmark the hot kernels under numba and under the pure-Python fallback.

Runs the planner objective, the margin kernel and a short simulation in the
current process, then re-invokes itself in a subprocess with RTS_NO_NUMBA=1
and prints a side-by-side table.

Usage: python benchmarks/bench_kernels.py [--inner-only]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def timed(fn, *args, repeat=3, number=200):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        for _ in range(number):
            fn(*args)
        best = min(best, (time.perf_counter() - start) / number)
    return best


def collect():
    from rtsim import kernels
    from rtsim.accel import USE_NUMBA
    from rtsim.config import load_scenario
    from rtsim.dynamics import AgentModel
    from rtsim.estimation import SensorModel, TargetEstimate
    from rtsim.planner import PlanAgent, PlannerConfig, _Problem
    from rtsim.sim import run
    from rtsim.zones import CommZone, SensingZone

    rng = np.random.default_rng(0)
    config = PlannerConfig(objective_kind="distance-surrogate")
    agents = [
        PlanAgent(
            robot_id=i,
            position=rng.uniform(-1, 1, 2),
            model=AgentModel.single_integrator(0.1, 1.0),
            sensor=SensorModel(0.05, 0.05),
            sensing_ok=True,
            assigned=frozenset({0, 1}),
        )
        for i in range(2)
    ]
    estimates = [TargetEstimate(rng.uniform(-1, 1, 2), 0.2 * np.eye(2)) for _ in range(2)]
    szones = [
        SensingZone(id=l, mu=rng.uniform(-1, 1, 2), sigma=0.3 * np.eye(2),
                    radius=0.4, attack_freq=1.0, eps_recover=0.1)
        for l in range(2)
    ]
    czones = [
        CommZone(id=5, mu=rng.uniform(-1, 1, 2), sigma=0.3 * np.eye(2),
                 delta2=0.4, attack_freq=1.0, eps_recover=0.1)
    ]
    problem = _Problem(agents, estimates, szones, czones, config,
                       cstar_zero=False, tracking_on=True)
    u = rng.uniform(-1, 1, 4)

    # warm-up triggers JIT compilation so it is not billed to the timings
    problem.objective(u)
    kernels.chance_margin(1.0, 0.5, 0.0, 0.0, 0.3, 0.0, 0.3, 0.4, 0.9)
    kernels.erf_inv(0.8)

    results = {
        "path": "numba" if USE_NUMBA else "python",
        "group_objective_us": timed(problem.objective, u, number=2000) * 1e6,
        "chance_margin_us": timed(
            kernels.chance_margin, 1.0, 0.5, 0.0, 0.0, 0.3, 0.0, 0.3, 0.4, 0.9,
            number=5000,
        ) * 1e6,
        "erf_inv_us": timed(kernels.erf_inv, 0.8, number=5000) * 1e6,
    }

    start = time.perf_counter()
    run(load_scenario("fig4_sensing", seed=0, max_steps=100))
    results["sim_100_steps_s"] = time.perf_counter() - start
    return results


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--inner-only", action="store_true",
                        help="emit JSON for the current path and exit")
    args = parser.parse_args()

    results = collect()
    if args.inner_only:
        print(json.dumps(results))
        return

    env = dict(os.environ)
    env["RTS_NO_NUMBA"] = "1"
    proc = subprocess.run(
        [sys.executable, __file__, "--inner-only"],
        capture_output=True, text=True, env=env, check=True,
    )
    fallback = json.loads(proc.stdout.strip().split("\n")[-1])

    rows = [
        ("group objective (us/eval)", "group_objective_us"),
        ("chance margin (us/call)", "chance_margin_us"),
        ("erf_inv (us/call)", "erf_inv_us"),
        ("fig4 sim, 100 steps (s)", "sim_100_steps_s"),
    ]
    print(f"{'kernel':<28} {'numba':>12} {'python':>12} {'speedup':>9}")
    for label, key in rows:
        fast, slow = results[key], fallback[key]
        print(f"{label:<28} {fast:>12.2f} {slow:>12.2f} {slow / fast:>8.1f}x")


if __name__ == "__main__":
    main()
