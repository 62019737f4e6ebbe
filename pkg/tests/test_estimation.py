import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_spd
from rtsim.dynamics import AgentModel
from rtsim.estimation import (
    FilterBank,
    SensorModel,
    TargetEstimate,
    covariance_intersection,
    ekf_predict,
    ekf_update,
    measure,
    mse,
    range_bearing_jacobian,
    total_trace,
    wrap_angle,
)


def test_wrap_angle_interval():
    assert wrap_angle(math.pi) == pytest.approx(math.pi)
    assert wrap_angle(-math.pi) == pytest.approx(math.pi)
    assert wrap_angle(1.5 * math.pi) == pytest.approx(-0.5 * math.pi)
    assert wrap_angle(0.0) == 0.0
    for theta in np.linspace(-20.0, 20.0, 401):
        w = wrap_angle(theta)
        assert -math.pi < w <= math.pi


def test_measure_noiseless_limits(rng):
    sensor = SensorModel(range_std=1e-12, bearing_std=1e-12)
    r, b = measure([0.0, 0.0], [1.0, 0.0], sensor, rng)
    assert r == pytest.approx(1.0, abs=1e-9)
    assert b == pytest.approx(0.0, abs=1e-9)
    r, b = measure([0.0, 0.0], [0.0, 2.0], sensor, rng)
    assert r == pytest.approx(2.0, abs=1e-9)
    assert b == pytest.approx(math.pi / 2.0, abs=1e-9)


def test_measure_bearing_wraps(rng):
    sensor = SensorModel(range_std=1e-12, bearing_std=1e-12)
    # true bearing pi: tiny noise keeps the result in (-pi, pi]
    for _ in range(20):
        _, b = measure([1.0, 0.0], [0.0, 0.0], SensorModel(1e-12, 1e-6), rng)
        assert -math.pi < b <= math.pi


def test_measure_coincident_skipped(rng):
    assert measure([1.0, 1.0], [1.0, 1.0], SensorModel(0.1, 0.1), rng) is None


def test_ekf_predict_identity_and_trace():
    est = TargetEstimate([1.0, -1.0], 0.3 * np.eye(2))
    model = AgentModel(process=np.eye(2), control=np.eye(2), u_max=1.0)
    out = ekf_predict(est, model)
    assert np.allclose(out.mean, est.mean)
    assert np.allclose(out.cov, est.cov)
    q = 0.07
    out = ekf_predict(est, model, q=q * np.eye(2))
    assert out.trace == pytest.approx(est.trace + 2.0 * q)


def test_ekf_predict_contraction_matches_oracle():
    est = TargetEstimate([0.0, 0.0], np.eye(2))
    model = AgentModel(process=0.9 * np.eye(2), control=np.eye(2), u_max=1.0)
    out = ekf_predict(est, model)
    a = 0.9 * np.eye(2)
    assert np.allclose(out.cov, a @ np.eye(2) @ a.T)
    assert np.allclose(out.cov, 0.81 * np.eye(2))


def test_jacobian_axis_aligned():
    h = range_bearing_jacobian([1.0, 0.0], [0.0, 0.0])
    assert np.allclose(h[0], [1.0, 0.0])
    assert np.allclose(h[1], [0.0, 1.0])
    assert range_bearing_jacobian([0.0, 0.0], [0.0, 0.0]) is None


def test_ekf_update_zero_noise_convergence():
    """Repeated near-noiseless updates drive the mean to the true position."""
    rng = np.random.default_rng(7)
    true_pos = np.array([1.0, 1.0])
    robots = [np.array([0.0, 0.0]), np.array([0.0, 2.0])]
    sensor = SensorModel(range_std=1e-4, bearing_std=1e-4)
    est = TargetEstimate([0.9, 1.1], 0.1 * np.eye(2))
    for _ in range(50):
        obs = []
        for robot in robots:
            r, b = measure(robot, true_pos, sensor, rng)
            obs.append((robot, r, b, sensor))
        est, skipped = ekf_update(est, obs)
        assert skipped == 0
    assert np.linalg.norm(est.mean - true_pos) < 1e-3


def test_ekf_update_infinite_noise_is_noop():
    est = TargetEstimate([1.0, 2.0], 0.1 * np.eye(2))
    sensor = SensorModel(range_std=1e9, bearing_std=1e9)
    out, _ = ekf_update(est, [(np.zeros(2), 2.0, 0.5, sensor)])
    assert np.allclose(out.mean, est.mean, atol=1e-9)
    assert np.allclose(out.cov, est.cov, atol=1e-9)


def test_ekf_update_never_increases_trace(rng):
    for _ in range(50):
        est = TargetEstimate(rng.uniform(-2, 2, 2), random_spd(rng, 0.3))
        obs = []
        for _ in range(rng.integers(1, 4)):
            robot = rng.uniform(-3, 3, 2)
            sensor = SensorModel(*rng.uniform(0.01, 0.5, 2))
            r = float(np.linalg.norm(est.mean - robot) + rng.normal(0, sensor.range_std))
            b = math.atan2(*(est.mean - robot)[::-1]) + rng.normal(0, sensor.bearing_std)
            obs.append((robot, r, wrap_angle(b), sensor))
        out, _ = ekf_update(est, obs)
        assert out.trace <= est.trace + 1e-12


def test_ekf_update_covariance_stays_symmetric_pd(rng):
    est = TargetEstimate([0.0, 0.0], random_spd(rng))
    for _ in range(30):
        robot = rng.uniform(-2, 2, 2)
        sensor = SensorModel(0.05, 0.05)
        out, _ = ekf_update(est, [(robot, 1.0, 0.3, sensor)])
        assert np.abs(out.cov - out.cov.T).max() < 1e-12
        assert np.linalg.eigvalsh(out.cov).min() > 0
        est = out


def test_ekf_update_skips_singular_geometry():
    est = TargetEstimate([0.0, 0.0], np.eye(2))
    out, skipped = ekf_update(est, [(np.zeros(2), 0.5, 0.1, SensorModel(0.1, 0.1))])
    assert skipped == 1
    assert np.allclose(out.mean, est.mean)


def test_ci_equal_covariances_tie_break():
    cov = np.array([[0.5, 0.1], [0.1, 0.3]])
    a = TargetEstimate([0.0, 0.0], cov)
    b = TargetEstimate([2.0, 4.0], cov)
    merged, omega = covariance_intersection(a, b)
    assert omega == 0.5
    assert np.allclose(merged.cov, cov, atol=1e-9)
    assert np.allclose(merged.mean, [1.0, 2.0], atol=1e-9)


def test_ci_identical_means():
    a = TargetEstimate([1.0, -1.0], 0.2 * np.eye(2))
    b = TargetEstimate([1.0, -1.0], np.array([[0.6, 0.2], [0.2, 0.9]]))
    merged, _ = covariance_intersection(a, b)
    assert np.allclose(merged.mean, [1.0, -1.0], atol=1e-9)


def test_ci_dominant_input_wins():
    a = TargetEstimate([0.0, 0.0], np.eye(2))
    b = TargetEstimate([5.0, 5.0], 100.0 * np.eye(2))
    merged, omega = covariance_intersection(a, b)
    assert omega > 0.99
    assert np.allclose(merged.cov, np.eye(2), atol=1e-6)
    assert np.allclose(merged.mean, a.mean, atol=1e-4)


def test_ci_omega_matches_grid_oracle(rng):
    """Golden-section omega vs. brute-force minimization on a 1e4 grid."""
    for _ in range(20):
        a = TargetEstimate(rng.uniform(-2, 2, 2), random_spd(rng))
        b = TargetEstimate(rng.uniform(-2, 2, 2), random_spd(rng))
        merged, omega = covariance_intersection(a, b)
        inv_a, inv_b = np.linalg.inv(a.cov), np.linalg.inv(b.cov)
        grid = np.linspace(0.0, 1.0, 10_001)
        traces = [np.trace(np.linalg.inv(w * inv_a + (1 - w) * inv_b)) for w in grid]
        assert merged.trace <= min(traces) + 1e-6


def test_ci_consistency_and_commutativity(rng):
    for _ in range(200):
        a = TargetEstimate(rng.uniform(-2, 2, 2), random_spd(rng))
        b = TargetEstimate(rng.uniform(-2, 2, 2), random_spd(rng))
        m_ab, w_ab = covariance_intersection(a, b)
        m_ba, w_ba = covariance_intersection(b, a)
        assert m_ab.trace <= min(a.trace, b.trace) + 1e-9
        assert np.allclose(m_ab.cov, m_ba.cov, atol=1e-9)
        assert np.allclose(m_ab.mean, m_ba.mean, atol=1e-9)
        assert w_ab == pytest.approx(1.0 - w_ba, abs=1e-9)


def test_ci_rejects_non_spd():
    bad = TargetEstimate([0.0, 0.0], np.eye(2))
    bad.cov = np.array([[1.0, 0.0], [0.0, -1.0]])  # bypass sanitization
    good = TargetEstimate([0.0, 0.0], np.eye(2))
    with pytest.raises(ValueError):
        covariance_intersection(bad, good)


def test_mse_and_total_trace():
    ests = [TargetEstimate([0.0, 0.0], np.eye(2)), TargetEstimate([1.0, 1.0], np.eye(2))]
    assert mse(ests, [[0.0, 0.0], [1.0, 1.0]]) == 0.0
    assert total_trace(ests) == pytest.approx(4.0)
    # mixed case: errors (0.1, 0) and (0, 0.2) -> mean of 0.01 and 0.04
    assert mse(ests, [[0.1, 0.0], [1.0, 1.2]]) == pytest.approx(0.025)


def test_filter_bank_copy_is_deep():
    bank = FilterBank(
        owner="group",
        estimates=[TargetEstimate([0.0, 0.0], np.eye(2))],
        process_noise=1e-4 * np.eye(2),
    )
    clone = bank.copy(owner="robot-1")
    clone.estimates[0].mean[0] = 99.0
    assert bank.estimates[0].mean[0] == 0.0
    assert clone.owner == "robot-1"


def test_sensor_model_validation():
    with pytest.raises(ValueError):
        SensorModel(range_std=0.0, bearing_std=0.1)
