"""
Discrete consistency check of a triplet (X, Y, Z) against the coupled
equilibrium FBSDE for general utilities:

    dX = [ r X - |theta^H|^2 U2'/U2'' - theta^H . Z^H + e - c ] ds + [ -(U2'/U2'') theta^H - Z^H ] . dW^H
    dY = G ds + Z . dW
    G  = -r X + |theta^H|^2 U2'/U2'' + theta^H . Z^H - e + c - r U2'/U2''
         - (1/2)|theta^H|^2 U2''' U2'^2 / U2''^3 - (1/2)(U2'''/U2'')|Z^O|^2

with U2 derivatives at X + Y, c = (U1')^-1(lambda2(s, T) U2'(X + Y)) and
Y_T = E.
"""

import logging

import numpy as np

from common.reports import ValidationReport

logger = logging.getLogger(__name__)

TERMINAL_TOL = 1e-8


def fbsde_residual_check(X, Y, Z, market, lambda2, u2, u1, grid, ensemble, drift_tolerance=None,
                         terminal_tolerance=TERMINAL_TOL):
    """
    One-step residuals of both equations.

    Drift consistency: the path mean of (increment - drift dt - diffusion . dW)
    divided by dt, reported as max and mean over steps. Diffusion
    consistency: path mean of the summed (centred increment . dW - diffusion dt),
    a quadratic covariation estimate. Terminal mismatch: max |Y_T - E|.
    """
    report = ValidationReport(subject='fbsde')
    grid = np.asarray(grid, dtype=float)
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n_paths, n_grid = X.shape
    d, d1 = market.d, market.d1
    Z = np.broadcast_to(np.asarray(Z, dtype=float), (n_paths, n_grid, d))
    W = ensemble.W
    dW = ensemble.dW
    dt = np.diff(grid)

    forward_drift = np.zeros(n_grid - 1)
    backward_drift = np.zeros(n_grid - 1)
    forward_covariation = np.zeros((n_paths, d1))
    backward_covariation = np.zeros((n_paths, d))
    for k in range(n_grid - 1):
        t = grid[k]
        w = W[:, k, :]
        x, y, z = X[:, k], Y[:, k], Z[:, k, :]
        level = x + y
        first = np.asarray(u2.evaluate(level, 1))
        second = np.asarray(u2.evaluate(level, 2))
        third = np.asarray(u2.evaluate(level, 3))
        ratio = first / second
        rate = market.rate(t, w)
        theta_h = market.hedgeable_price(t, w)
        income = market.income_rate(t, w)
        consumption = np.asarray(u1.marginal_inverse(lambda2.to_terminal(t) * first))
        z_h, z_o = z[:, :d1], z[:, d1:]
        theta_sq = np.sum(theta_h ** 2, axis=1)
        exposure = np.sum(theta_h * z_h, axis=1)

        drift_x = rate * x - theta_sq * ratio - exposure + income - consumption
        diffusion_x = -ratio[:, None] * theta_h - z_h
        drift_y = -rate * x + theta_sq * ratio + exposure - income + consumption - rate * ratio \
            - 0.5 * theta_sq * third * first ** 2 / second ** 3 - 0.5 * (third / second) * np.sum(z_o ** 2, axis=1)

        centred_x = X[:, k + 1] - x - drift_x * dt[k]
        centred_y = Y[:, k + 1] - y - drift_y * dt[k]
        forward_drift[k] = abs(np.mean(centred_x - np.sum(diffusion_x * dW[:, k, :d1], axis=1))) / dt[k]
        backward_drift[k] = abs(np.mean(centred_y - np.sum(z * dW[:, k, :], axis=1))) / dt[k]
        forward_covariation += centred_x[:, None] * dW[:, k, :d1] - diffusion_x * dt[k]
        backward_covariation += centred_y[:, None] * dW[:, k, :] - z * dt[k]

    terminal_mismatch = float(np.max(np.abs(Y[:, -1] - market.terminal_payment(W[:, -1, :]))))
    report.constants = {
        'forward_drift_max': float(forward_drift.max()),
        'forward_drift_mean': float(forward_drift.mean()),
        'backward_drift_max': float(backward_drift.max()),
        'backward_drift_mean': float(backward_drift.mean()),
        'forward_covariation_gap': float(np.max(np.abs(forward_covariation.mean(axis=0)))),
        'backward_covariation_gap': float(np.max(np.abs(backward_covariation.mean(axis=0)))),
        'terminal_mismatch': terminal_mismatch,
        'n_steps': int(n_grid - 1),
        'n_paths': int(n_paths),
    }
    if not all(np.isfinite(value) for value in report.constants.values()):
        report.flag('finite', 'Residuals are not finite')
    if terminal_mismatch > terminal_tolerance:
        report.flag('terminal', 'Y_T differs from E', mismatch=terminal_mismatch)
    if drift_tolerance is not None:
        worst = max(report.constants['forward_drift_max'], report.constants['backward_drift_max'])
        if worst > drift_tolerance:
            report.flag('drift', 'Drift residual above tolerance', residual=worst, tolerance=drift_tolerance)
    logger.info(f'FBSDE residuals: forward {forward_drift.max():.3e}, backward {backward_drift.max():.3e}, '
                f'terminal {terminal_mismatch:.3e}')
    return report
