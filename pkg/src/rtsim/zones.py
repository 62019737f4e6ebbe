"""Danger zones: Gaussian risk fields, chance-constraint margins, membership MC.

Zone centers are modeled as Gaussian-distributed (mu, sigma); the realized
center used by the attack simulation and jam checks is mu itself, so runs
stay reproducible per seed while sigma expresses the planner's uncertainty.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels


def _check_spd(sigma, name):
    sigma = np.asarray(sigma, dtype=float).reshape(2, 2)
    if abs(sigma[0, 1] - sigma[1, 0]) > 1e-12:
        raise ValueError(f"{name}: covariance must be symmetric")
    eigvals = np.linalg.eigvalsh(sigma)
    if eigvals.min() <= 0.0:
        raise ValueError(f"{name}: covariance must be positive definite")
    return sigma


@dataclass(frozen=True)
class SensingZone:
    """Sensing danger zone: Gaussian-center disk with safety clearance radius."""

    id: int
    mu: np.ndarray
    sigma: np.ndarray
    radius: float
    attack_freq: float
    eps_recover: float

    def __post_init__(self):
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=float).reshape(2))
        object.__setattr__(self, "sigma", _check_spd(self.sigma, f"sensing zone {self.id}"))
        if self.radius <= 0.0:
            raise ValueError("radius must be > 0")
        if self.attack_freq <= 0.0:
            raise ValueError("attack_freq must be > 0")
        if not 0.0 < self.eps_recover < 1.0:
            raise ValueError("eps_recover must lie in (0, 1)")


@dataclass(frozen=True)
class CommZone:
    """Communication danger zone: Gaussian-center jammer with distance-ratio reach."""

    id: int
    mu: np.ndarray
    sigma: np.ndarray
    delta2: float
    attack_freq: float
    eps_recover: float

    def __post_init__(self):
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=float).reshape(2))
        object.__setattr__(self, "sigma", _check_spd(self.sigma, f"comm zone {self.id}"))
        if self.delta2 <= 0.0:
            raise ValueError("delta2 must be > 0")
        if self.attack_freq <= 0.0:
            raise ValueError("attack_freq must be > 0")
        if not 0.0 < self.eps_recover < 1.0:
            raise ValueError("eps_recover must lie in (0, 1)")


def _check_eps(eps):
    # Planner confidence levels live in (0, 0.5]; recovery thresholds may be
    # anywhere in (0, 1), which flips the buffer sign via erf_inv(1 - 2*eps).
    if not 0.0 < eps < 1.0:
        raise ValueError("confidence level must lie in (0, 1)")


def beta_for(eps):
    """Chance-constraint buffer coefficient erf_inv(1 - 2*eps)."""
    _check_eps(eps)
    return kernels.erf_inv(1.0 - 2.0 * eps)


def sensing_margin(x, zone: SensingZone, eps):
    """Linearized sensing chance-constraint margin at position x.

    Margin >= 0 means P(robot within the zone's clearance radius) <= eps
    under the half-space linearization.
    """
    x = np.asarray(x, dtype=float)
    return kernels.chance_margin(
        x[0], x[1], zone.mu[0], zone.mu[1],
        zone.sigma[0, 0], zone.sigma[0, 1], zone.sigma[1, 1],
        zone.radius, beta_for(eps),
    )


def comm_margin(x, zone: CommZone, c_star, eps):
    """Linearized jamming chance-constraint margin at position x.

    c_star is the distance to the farthest communication teammate; pass 0
    for single-robot planning and recovery checks.
    """
    if c_star < 0.0:
        raise ValueError("c_star must be >= 0")
    x = np.asarray(x, dtype=float)
    return kernels.chance_margin(
        x[0], x[1], zone.mu[0], zone.mu[1],
        zone.sigma[0, 0], zone.sigma[0, 1], zone.sigma[1, 1],
        zone.delta2 * c_star, beta_for(eps),
    )


def attack_prob_sensing(x, zone: SensingZone):
    """Attack probability of a sensing zone at x, clamped to [0, 1]."""
    x = np.asarray(x, dtype=float)
    return kernels.gauss_risk(
        x[0], x[1], zone.mu[0], zone.mu[1],
        zone.sigma[0, 0], zone.sigma[0, 1], zone.sigma[1, 1],
    )


def attack_prob_comm(x, zone: CommZone):
    """Attack probability of a communication zone at x, clamped to [0, 1]."""
    x = np.asarray(x, dtype=float)
    return kernels.gauss_risk(
        x[0], x[1], zone.mu[0], zone.mu[1],
        zone.sigma[0, 0], zone.sigma[0, 1], zone.sigma[1, 1],
    )


def direct_jam_condition(x_i, zone: CommZone, c_star):
    """True when the realized jammer position reaches robot i directly."""
    x_i = np.asarray(x_i, dtype=float)
    return float(np.linalg.norm(zone.mu - x_i)) <= zone.delta2 * c_star


def membership_prob_mc(x, zone, c_star, n_samples, rng):
    """Monte-Carlo estimate of the zone-membership probability at x.

    Samples zone centers from N(mu, sigma) and counts how often x falls
    within the zone (clearance radius for sensing zones, delta2 * c_star for
    communication zones). Validation oracle for the erf-linearized margins.
    """
    n_samples = int(n_samples)
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    x = np.asarray(x, dtype=float)
    if isinstance(zone, SensingZone):
        clearance = zone.radius
    else:
        clearance = zone.delta2 * c_star
    chol = np.linalg.cholesky(zone.sigma)
    centers = zone.mu + rng.standard_normal((n_samples, 2)) @ chol.T
    dist = np.hypot(centers[:, 0] - x[0], centers[:, 1] - x[1])
    return float(np.mean(dist <= clearance))
