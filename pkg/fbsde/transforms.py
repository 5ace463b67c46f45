"""
Forward simulation of the transformed wealth and the maps between the
coupled triplet (X, Y, Z) and the decoupled one (Xt, Yt, Zt):

    X = Xt / h,   Y = Yt + (1 - 1/h) Xt,   Z^H = Zt^H + (1 - 1/h)(theta^H / g2 - Zt^H),   Z^O = Zt^O
"""

import logging

import numpy as np
from scipy.integrate import cumulative_trapezoid

from common.exceptions import DomainError, GridError, StateError
from fbsde.solvers import constant_rate, log_weight
from market.ensemble import check_finite

logger = logging.getLogger(__name__)


def _check_positive(h):
    h = np.asarray(h, dtype=float)
    if np.any(h <= 0):
        raise DomainError('h must be positive on the grid', worst=float(h.min()))
    return h


def untransform(xtilde, ytilde, ztilde, h, theta_h, gamma2, d1):
    """
    Map the decoupled triplet back. Arrays broadcast over a leading path
    axis; h has one entry per grid point, theta_h is (..., n_grid, d1).
    """
    h = _check_positive(h)
    factor = 1.0 - 1.0 / h
    X = xtilde / h
    Y = ytilde + factor * xtilde
    theta_h = np.asarray(theta_h, dtype=float)
    shape = np.broadcast_shapes(np.shape(ztilde), theta_h.shape[:-1] + (np.shape(ztilde)[-1],))
    Z = np.array(np.broadcast_to(ztilde, shape), dtype=float)
    Z[..., :d1] = Z[..., :d1] + factor[:, None] * (theta_h / gamma2 - Z[..., :d1])
    return X, Y, Z


def forward_transform(X, Y, Z, h, theta_h, gamma2, d1):
    """Inverse of ``untransform``"""
    h = _check_positive(h)
    xtilde = h * X
    ytilde = Y - (h - 1.0) * X
    ztilde = np.array(Z, dtype=float)
    ztilde[..., :d1] = h[:, None] * ztilde[..., :d1] - (h - 1.0)[:, None] * np.asarray(theta_h) / gamma2
    return xtilde, ytilde, ztilde


def simulate_forward_tilde(market, solution, x, ensemble):
    """
    Euler scheme for Xt from Xt_0 = h(0) x with drift

        -rho h Yt - theta^H . Zt^H + |theta^H|^2 / g2 + h e + (h/g1) log(rho lambda2(s, T))

    and diffusion (theta^H / g2 - Zt^H) . dW^H, on the solution's grid.

    Returns a copy of the solution carrying Xt and the untransformed
    (X, Y, Z) on every ensemble path.
    """
    if solution.ytilde is None or solution.ztilde is None:
        raise StateError('Backward solution must exist before the forward simulation')
    if not np.array_equal(ensemble.grid, solution.grid):
        raise GridError('Forward ensemble must share the solution grid')
    if not np.isfinite(x):
        raise DomainError('Initial wealth must be finite', x=x)
    r = constant_rate(market)
    schedule = solution.schedule
    rho = schedule.rho
    gamma1, gamma2, d1 = solution.gamma1, solution.gamma2, solution.d1
    n_paths, n_steps, d = ensemble.dW.shape
    W = ensemble.W
    dt = ensemble.steps
    deterministic = solution.is_deterministic and market.is_deterministic

    xtilde = np.empty((n_paths, n_steps + 1))
    xtilde[:, 0] = schedule.values[0] * x
    if deterministic:
        ytilde = solution.ytilde
        ztilde = solution.ztilde
        theta_h = np.array([market.hedgeable_price_at(t) for t in solution.grid])
    else:
        ytilde = np.empty((n_paths, n_steps + 1))
        ztilde = np.empty((n_paths, n_steps + 1, d))
        theta_h = np.empty((n_paths, n_steps + 1, d1))

    for k in range(n_steps + 1):
        t = solution.grid[k]
        w = W[:, k, :]
        if deterministic:
            y, z, th = ytilde[k], ztilde[k][None, :], theta_h[k][None, :]
        else:
            y = ytilde[:, k] = solution.ytilde_at(t, w)
            z = ztilde[:, k, :] = solution.ztilde_at(t, w)
            th = theta_h[:, k, :] = market.hedgeable_price(t, w)
        if k == n_steps:
            break
        h = schedule.values[k]
        drift = -rho * h * y - np.sum(th * z[:, :d1], axis=1) + np.sum(th ** 2, axis=1) / gamma2 \
            + h * market.income_rate(t, w) + h / gamma1 * log_weight(solution.lambda2, t, rho)
        diffusion = th / gamma2 - z[:, :d1]
        xtilde[:, k + 1] = xtilde[:, k] + drift * dt[k] + np.sum(diffusion * ensemble.dW[:, k, :d1], axis=1)
        check_finite(xtilde[:, k + 1], k, 'transformed wealth')

    X, Y, Z = untransform(xtilde, ytilde, ztilde, schedule.values, theta_h, gamma2, d1)
    logger.info(f'Forward simulation on {n_paths} paths: mean Xt_T={xtilde[:, -1].mean():.10g}, r={r}')
    return solution.with_paths(x0=float(x), ensemble=ensemble, theta_h=theta_h, xtilde=xtilde, X=X, Y=Y, Z=Z)


def propagate_tilde_mean(market, solution, x):
    """
    E[Xt_t] for deterministic data: h(0) x plus the integrated drift,
    which does not depend on the noise when Zt = 0.
    """
    if not (solution.is_deterministic and market.is_deterministic):
        raise DomainError('Mean propagation needs deterministic coefficients')
    grid = solution.grid
    schedule = solution.schedule
    rho = schedule.rho
    h = schedule.values
    theta_h = np.array([market.hedgeable_price_at(t) for t in grid])
    income = np.array([market.income.value_at(t) for t in grid])
    drift = -rho * h * solution.ytilde + np.sum(theta_h ** 2, axis=1) / solution.gamma2 + h * income \
        + h / solution.gamma1 * log_weight(solution.lambda2, grid, rho)
    return h[0] * x + cumulative_trapezoid(drift, grid, initial=0.0)
