"""Range-bearing measurements, per-group EKF, covariance intersection."""

import math
from dataclasses import dataclass, field

import numpy as np

_EIG_FLOOR = 1e-12
_CI_TOL = 1e-6
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def wrap_angle(theta):
    """Wrap an angle to (-pi, pi]."""
    wrapped = theta % (2.0 * math.pi)
    if wrapped > math.pi:
        wrapped -= 2.0 * math.pi
    return wrapped


def _sanitize_cov(cov):
    """Symmetrize and floor eigenvalues; keeps covariances SPD."""
    cov = 0.5 * (cov + cov.T)
    eigvals, eigvecs = np.linalg.eigh(cov)
    if eigvals.min() < _EIG_FLOOR:
        eigvals = np.maximum(eigvals, _EIG_FLOOR)
        cov = (eigvecs * eigvals) @ eigvecs.T
        cov = 0.5 * (cov + cov.T)
    return cov


@dataclass(frozen=True)
class SensorModel:
    """Range and bearing sensor noise (standard deviations)."""

    range_std: float
    bearing_std: float

    def __post_init__(self):
        if self.range_std <= 0.0 or self.bearing_std <= 0.0:
            raise ValueError("sensor noise std must be > 0")


@dataclass
class TargetEstimate:
    """Mean + covariance pair for one target."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float).reshape(2)
        self.cov = _sanitize_cov(np.asarray(self.cov, dtype=float).reshape(2, 2))

    def copy(self):
        return TargetEstimate(self.mean.copy(), self.cov.copy())

    @property
    def trace(self):
        return float(self.cov[0, 0] + self.cov[1, 1])


@dataclass
class FilterBank:
    """One EKF estimate per target, owned by the comm group or a single robot."""

    owner: str
    estimates: list
    process_noise: np.ndarray

    def __post_init__(self):
        self.process_noise = np.asarray(self.process_noise, dtype=float).reshape(2, 2)
        if np.linalg.eigvalsh(self.process_noise).min() < -1e-12:
            raise ValueError("process noise must be positive semidefinite")

    def copy(self, owner=None):
        return FilterBank(
            owner=self.owner if owner is None else owner,
            estimates=[e.copy() for e in self.estimates],
            process_noise=self.process_noise.copy(),
        )


def range_bearing_jacobian(mean, robot):
    """Measurement Jacobian wrt the target position, evaluated at `mean`.

    Range row: unit vector from robot to mean; bearing row: perpendicular
    over squared distance. Returns None when the geometry is singular
    (distance below 1e-6).
    """
    delta = np.asarray(mean, dtype=float) - np.asarray(robot, dtype=float)
    d2 = float(delta @ delta)
    d = math.sqrt(d2)
    if d < 1e-6:
        return None
    return np.array(
        [
            [delta[0] / d, delta[1] / d],
            [-delta[1] / d2, delta[0] / d2],
        ]
    )


def measure(robot, target_true, sensor: SensorModel, rng):
    """Noisy (range, bearing) from robot to target, or None when coincident.

    Bearing is wrapped to (-pi, pi]. Coincident positions make the geometry
    singular; the caller skips (and logs) that pair for the step.
    """
    robot = np.asarray(robot, dtype=float)
    target_true = np.asarray(target_true, dtype=float)
    delta = target_true - robot
    dist = float(np.linalg.norm(delta))
    if dist < 1e-12:
        return None
    rng_noise, bearing_noise = rng.standard_normal(2)
    rng_meas = dist + sensor.range_std * rng_noise
    bearing_meas = wrap_angle(math.atan2(delta[1], delta[0]) + sensor.bearing_std * bearing_noise)
    return rng_meas, bearing_meas


def ekf_predict(est: TargetEstimate, model, u_assumed=None, q=None):
    """EKF prediction through the target's linear model.

    u_assumed defaults to zero (trackers do not know target controls); q
    defaults to the zero matrix.
    """
    u = np.zeros(2) if u_assumed is None else np.asarray(u_assumed, dtype=float)
    q_mat = np.zeros((2, 2)) if q is None else np.asarray(q, dtype=float)
    mean = model.process @ est.mean + model.control @ u
    cov = model.process @ est.cov @ model.process.T + q_mat
    return TargetEstimate(mean, cov)


def ekf_update(est: TargetEstimate, observations):
    """Sequential range-bearing EKF updates.

    observations: iterable of (robot_position, range, bearing, SensorModel),
    already ordered (ascending robot id) by the caller. Each observation is
    a 2-D update with the Jacobian evaluated at the current mean; bearing
    innovations are wrapped to (-pi, pi]; the covariance update uses the
    Joseph form. Observations closer than 1e-6 to the mean are skipped.
    Returns (estimate, n_skipped).
    """
    mean = est.mean.copy()
    cov = est.cov.copy()
    skipped = 0
    for robot, rng_meas, bearing_meas, sensor in observations:
        robot = np.asarray(robot, dtype=float)
        h = range_bearing_jacobian(mean, robot)
        if h is None:
            skipped += 1
            continue
        delta = mean - robot
        d = float(np.linalg.norm(delta))
        predicted = np.array([d, math.atan2(delta[1], delta[0])])
        innovation = np.array(
            [
                rng_meas - predicted[0],
                wrap_angle(bearing_meas - predicted[1]),
            ]
        )
        r = np.diag([sensor.range_std**2, sensor.bearing_std**2])
        s = h @ cov @ h.T + r
        gain = cov @ h.T @ np.linalg.inv(s)
        mean = mean + gain @ innovation
        i_kh = np.eye(2) - gain @ h
        cov = _sanitize_cov(i_kh @ cov @ i_kh.T + gain @ r @ gain.T)
    return TargetEstimate(mean, cov), skipped


def _ci_trace(inv_a, inv_b, omega):
    info = omega * inv_a + (1.0 - omega) * inv_b
    merged = np.linalg.inv(info)
    return float(np.trace(merged)), merged


def covariance_intersection(a: TargetEstimate, b: TargetEstimate):
    """Covariance-intersection fusion of two estimates.

    omega minimizes trace of the merged covariance over [0, 1] via
    golden-section search (tolerance 1e-6) with the endpoints included, so
    the merged trace never exceeds either input's. A flat trace ties to
    omega = 0.5. Inputs are canonically ordered internally, which makes the
    fusion exactly symmetric under argument swap.
    """
    for est, name in ((a, "a"), (b, "b")):
        if np.linalg.eigvalsh(est.cov).min() <= 0.0:
            raise ValueError(f"estimate {name} covariance is not SPD")

    key_a = np.concatenate([a.cov.ravel(), a.mean])
    key_b = np.concatenate([b.cov.ravel(), b.mean])
    swapped = False
    for ka, kb in zip(key_a, key_b):
        if ka < kb:
            break
        if ka > kb:
            swapped = True
            break
    first, second = (b, a) if swapped else (a, b)

    inv_1 = np.linalg.inv(first.cov)
    inv_2 = np.linalg.inv(second.cov)

    lo, hi = 0.0, 1.0
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, _ = _ci_trace(inv_1, inv_2, x1)
    f2, _ = _ci_trace(inv_1, inv_2, x2)
    while hi - lo > _CI_TOL:
        if f1 < f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1, _ = _ci_trace(inv_1, inv_2, x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2, _ = _ci_trace(inv_1, inv_2, x2)
    omega = 0.5 * (lo + hi)

    candidates = [omega, 0.0, 1.0]
    traces = [_ci_trace(inv_1, inv_2, w)[0] for w in candidates]
    best = min(range(len(candidates)), key=lambda i: (traces[i], candidates[i]))
    omega = candidates[best]
    best_trace = traces[best]

    mid_trace, _ = _ci_trace(inv_1, inv_2, 0.5)
    if mid_trace <= best_trace + 1e-12:
        omega = 0.5

    _, merged_cov = _ci_trace(inv_1, inv_2, omega)
    merged_mean = merged_cov @ (
        omega * inv_1 @ first.mean + (1.0 - omega) * inv_2 @ second.mean
    )
    merged = TargetEstimate(merged_mean, merged_cov)
    return merged, (1.0 - omega) if swapped else omega


def mse(estimates, truths):
    """Mean squared position error over targets."""
    errors = [
        float(np.sum((est.mean - np.asarray(truth, dtype=float)) ** 2))
        for est, truth in zip(estimates, truths)
    ]
    return float(np.mean(errors))


def total_trace(estimates):
    """Sum of covariance traces over targets."""
    return float(sum(est.trace for est in estimates))
