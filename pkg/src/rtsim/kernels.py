"""Hot numeric kernels, numba-compiled unless RTS_NO_NUMBA is set.

Everything here operates on plain floats and contiguous float64 arrays so the
same source runs under numba nopython mode and as ordinary Python. The
planner evaluates `group_objective` hundreds of times per simulation step,
which is why the whole objective (candidate dynamics, farthest-teammate
distances, chance-constraint hinges and the one-step posterior trace) lives
in a single kernel.
"""

import math

import numpy as np

from .accel import njit

# Bisection bracket for the inverse error function: erf(6) == 1 - 2e-17,
# wider than any confidence level representable in double precision.
_ERFINV_BRACKET = 6.0
_ERFINV_TOL = 1e-10


@njit(cache=True)
def erf_inv(y):
    """Inverse error function by bisection on math.erf (|y| < 1).

    Absolute tolerance 1e-10 on the root. y == 0 returns exactly 0.0 so a
    confidence level of 0.5 collapses the chance-constraint buffer to zero.
    """
    if y == 0.0:
        return 0.0
    lo = -_ERFINV_BRACKET
    hi = _ERFINV_BRACKET
    while hi - lo > _ERFINV_TOL:
        mid = 0.5 * (lo + hi)
        if math.erf(mid) < y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@njit(cache=True)
def eig_max_2x2(s00, s01, s11):
    """Largest eigenvalue of a symmetric 2x2 matrix."""
    half_tr = 0.5 * (s00 + s11)
    disc = math.sqrt(0.25 * (s00 - s11) ** 2 + s01 * s01)
    return half_tr + disc


@njit(cache=True)
def chance_margin(px, py, mux, muy, s00, s01, s11, clearance, beta):
    """Linearized chance-constraint margin for one robot and one zone.

    With a = mu - x and a_hat = a/|a|, returns
        |a| - clearance - beta * sqrt(2 * a_hat' Sigma a_hat)
    where beta = erf_inv(1 - 2*eps). `clearance` is the sensing safety
    radius, or delta2 * c_star for communication zones. Margin >= 0 means
    the linearized membership-probability bound holds.

    At |a| < 1e-9 the direction is undefined; fall back to the worst
    eigen-direction so the margin stays finite and conservative.
    """
    ax = mux - px
    ay = muy - py
    norm2 = ax * ax + ay * ay
    if norm2 < 1e-18:
        return -clearance - beta * math.sqrt(2.0 * eig_max_2x2(s00, s01, s11))
    norm = math.sqrt(norm2)
    quad = (ax * ax * s00 + 2.0 * ax * ay * s01 + ay * ay * s11) / norm2
    return norm - clearance - beta * math.sqrt(2.0 * quad)


@njit(cache=True)
def gauss_risk(px, py, mux, muy, s00, s01, s11):
    """Attack-probability field phi of a zone at point (px, py), in [0, 1].

    Gaussian-shaped risk exp(-a' inv(Sigma) a / 2) scaled by 1/(2*pi*det),
    clamped to [0, 1].
    """
    ax = mux - px
    ay = muy - py
    det = s00 * s11 - s01 * s01
    quad = (ax * ax * s11 - 2.0 * ax * ay * s01 + ay * ay * s00) / det
    phi = math.exp(-0.5 * quad) / (2.0 * math.pi * det)
    if phi > 1.0:
        return 1.0
    if phi < 0.0:
        return 0.0
    return phi


@njit(cache=True)
def posterior_trace(px, py, sense, zx, zy, c00, c01, c11, rinv_r, rinv_b, assign):
    """Sum over targets of trace of the one-step EKF posterior covariance.

    px, py: candidate robot positions; sense: 1 where a robot contributes
    measurements; (zx, zy): predicted target means; (c00, c01, c11):
    predicted covariance entries; rinv_r, rinv_b: per-robot inverse range /
    bearing noise variances; assign[i, j]: 1 when robot i observes target j.
    Targets with no observers contribute their prior trace. Robot-target
    pairs closer than 1e-9 are skipped (singular geometry).
    """
    total = 0.0
    n_robots = px.shape[0]
    n_targets = zx.shape[0]
    for j in range(n_targets):
        det_p = c00[j] * c11[j] - c01[j] * c01[j]
        i00 = c11[j] / det_p
        i01 = -c01[j] / det_p
        i11 = c00[j] / det_p
        for i in range(n_robots):
            if sense[i] == 0 or assign[i, j] == 0:
                continue
            dx = zx[j] - px[i]
            dy = zy[j] - py[i]
            d2 = dx * dx + dy * dy
            if d2 < 1e-18:
                continue
            # Range row (dx, dy)/d; bearing row (-dy, dx)/d^2.
            i00 += rinv_r[i] * dx * dx / d2 + rinv_b[i] * dy * dy / (d2 * d2)
            i01 += rinv_r[i] * dx * dy / d2 - rinv_b[i] * dx * dy / (d2 * d2)
            i11 += rinv_r[i] * dy * dy / d2 + rinv_b[i] * dx * dx / (d2 * d2)
        det_i = i00 * i11 - i01 * i01
        total += (i00 + i11) / det_i
    return total


@njit(cache=True)
def distance_surrogate(px, py, sense, zx, zy, assign, standoff):
    """Tracking surrogate: per target, squared standoff error of the
    closest-to-standoff observing robot. Targets with no observer add 0."""
    total = 0.0
    n_robots = px.shape[0]
    n_targets = zx.shape[0]
    for j in range(n_targets):
        best = np.inf
        for i in range(n_robots):
            if sense[i] == 0 or assign[i, j] == 0:
                continue
            dx = zx[j] - px[i]
            dy = zy[j] - py[i]
            err = math.sqrt(dx * dx + dy * dy) - standoff
            val = err * err
            if val < best:
                best = val
        if best < np.inf:
            total += best
    return total


@njit(cache=True)
def group_objective(
    u,
    x,
    phis,
    lams,
    sense,
    w1,
    w2,
    obj_mode,
    standoff,
    zx,
    zy,
    c00,
    c01,
    c11,
    rinv_r,
    rinv_b,
    assign,
    s_mu,
    s_cov,
    s_clear,
    s_w,
    s_vis,
    c_mu,
    c_cov,
    c_delta2,
    c_w,
    c_vis,
    beta1,
    beta2,
    cstar_zero,
):
    """Hinge-penalized planning objective for a set of robots.

    u is the flat control vector (2 per robot). Candidate positions follow
    each robot's linear dynamics. Farthest-teammate distances are computed
    self-consistently from the candidates unless cstar_zero is set (single
    robot planning). Slack variables are eliminated in closed form, i.e.
    each violated chance-constraint margin g contributes weight * (-g).

    obj_mode: 0 = one-step posterior trace, 1 = distance surrogate.
    s_w / c_w carry the (possibly per-zone boosted) slack weights w3 / w4.
    s_vis / c_vis mask which zones constrain which robot (a robot is only
    constrained by zones it knows about).
    """
    n_robots = x.shape[0]
    cand_x = np.empty(n_robots)
    cand_y = np.empty(n_robots)
    for i in range(n_robots):
        ux = u[2 * i]
        uy = u[2 * i + 1]
        cand_x[i] = phis[i, 0, 0] * x[i, 0] + phis[i, 0, 1] * x[i, 1] + lams[i, 0, 0] * ux + lams[i, 0, 1] * uy
        cand_y[i] = phis[i, 1, 0] * x[i, 0] + phis[i, 1, 1] * x[i, 1] + lams[i, 1, 0] * ux + lams[i, 1, 1] * uy

    cstar = np.zeros(n_robots)
    if cstar_zero == 0 and n_robots > 1:
        for i in range(n_robots):
            worst = 0.0
            for j in range(n_robots):
                if j == i:
                    continue
                dx = cand_x[i] - cand_x[j]
                dy = cand_y[i] - cand_y[j]
                d = math.sqrt(dx * dx + dy * dy)
                if d > worst:
                    worst = d
            cstar[i] = worst

    total = 0.0
    if w1 > 0.0:
        if obj_mode == 0:
            total += w1 * posterior_trace(
                cand_x, cand_y, sense, zx, zy, c00, c01, c11, rinv_r, rinv_b, assign
            )
        else:
            total += w1 * distance_surrogate(cand_x, cand_y, sense, zx, zy, assign, standoff)

    n_szones = s_clear.shape[0]
    n_czones = c_delta2.shape[0]
    for i in range(n_robots):
        ux = u[2 * i]
        uy = u[2 * i + 1]
        total += w2 * math.sqrt(ux * ux + uy * uy)
        for l in range(n_szones):
            if s_vis[i, l] == 0:
                continue
            g = chance_margin(
                cand_x[i], cand_y[i], s_mu[l, 0], s_mu[l, 1],
                s_cov[l, 0], s_cov[l, 1], s_cov[l, 2], s_clear[l], beta1,
            )
            if g < 0.0:
                total -= s_w[l] * g
        for k in range(n_czones):
            if c_vis[i, k] == 0:
                continue
            g = chance_margin(
                cand_x[i], cand_y[i], c_mu[k, 0], c_mu[k, 1],
                c_cov[k, 0], c_cov[k, 1], c_cov[k, 2], c_delta2[k] * cstar[i], beta2,
            )
            if g < 0.0:
                total -= c_w[k] * g
    return total
