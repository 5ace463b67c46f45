"""
Candidate equilibrium pair read off an FBSDE solution, and the pathwise
residuals of the two first-order conditions

    U1'(c_s) = lambda2(s, T) U2'(X_s + Y_s)
    U2'(X_s + Y_s) theta^H_s + U2''(X_s + Y_s)(pi^H_s + Z^H_s) = 0
"""

import logging
from dataclasses import dataclass

import numpy as np

from common.exceptions import DomainError
from fbsde.solvers import log_weight
from market.strategies import EquilibriumStrategy, StoredStrategy

logger = logging.getLogger(__name__)

NONZERO_TOL = 1e-8


def solution_state(solution):
    """(X + Y, Z, theta^H) on every path and grid point"""
    solution.require_forward()
    n_paths = solution.X.shape[0]
    level = solution.X + solution.Y
    Z = solution.Z if solution.Z.ndim == 3 else np.broadcast_to(solution.Z, (n_paths,) + solution.Z.shape)
    theta_h = solution.theta_h
    if theta_h.ndim == 2:
        theta_h = np.broadcast_to(theta_h, (n_paths,) + theta_h.shape)
    return level, Z, theta_h


def terminal_weights(lambda2, grid):
    weights = np.asarray(lambda2.to_terminal(grid), dtype=float)
    if np.any(weights <= 0):
        raise DomainError('lambda2(s, T) must be positive', worst=float(weights.min()))
    return weights


def _check_gamma(utility, expected, label):
    if abs(utility.gamma - expected) > 1e-12 * max(1.0, expected):
        raise DomainError(f'{label} risk aversion differs from the solved system', utility=utility.gamma,
                          solution=expected)


def extract_equilibrium(solution, u1, u2, lambda2, market):
    """
    Build the candidate pair.

    Exponential utilities give the feedback form driven by the transformed
    backward solution, which can be replayed on any noise. Other utilities
    give the per-path processes

        c = (U1')^-1(lambda2(s, T) U2'(X + Y)),   pi^H = -(U2'/U2'')(X + Y) theta^H - Z^H

    stored on the solution's own paths and grid.
    """
    solution.require_forward()
    grid = solution.grid
    weights = terminal_weights(lambda2, grid)

    if u1.kind == 'exponential' and u2.kind == 'exponential':
        _check_gamma(u1, solution.gamma1, 'Consumption')
        _check_gamma(u2, solution.gamma2, 'Terminal')
        log_weight(lambda2, grid, solution.schedule.rho)
        pair = EquilibriumStrategy(solution, market, u1.gamma, u2.gamma, lambda2)
        logger.info(f'Extracted feedback equilibrium pair ({solution.provenance})')
        return pair

    level, Z, theta_h = solution_state(solution)
    level = level[:, :-1]
    marginal = np.asarray(u2.evaluate(level, 1))
    curvature = np.asarray(u2.evaluate(level, 2))
    if np.any(curvature == 0):
        raise DomainError("U2'' vanishes on the solution paths")
    consumption = np.asarray(u1.marginal_inverse(weights[None, :-1] * marginal))
    investment = np.zeros(Z[:, :-1, :].shape)
    d1 = solution.d1
    investment[..., :d1] = -(marginal / curvature)[..., None] * theta_h[:, :-1, :] - Z[:, :-1, :d1]
    logger.info(f'Extracted stored equilibrium pair on {level.shape[0]} paths')
    return StoredStrategy(grid, consumption, investment, solution.d, d1)


def pair_on_paths(pair, solution):
    """Controls of ``pair`` at the solution's wealth X_{t_k} for every step k"""
    solution.require_forward()
    ensemble = solution.ensemble
    W = ensemble.W
    n_paths, n_steps = solution.X.shape[0], solution.n_steps
    consumption = np.empty((n_paths, n_steps))
    investment = np.empty((n_paths, n_steps, solution.d))
    for k in range(n_steps):
        c, pi = pair.controls(solution.grid[k], solution.X[:, k], W[:, k, :], step=k)
        consumption[:, k] = c
        investment[:, k, :] = pi
    return consumption, investment


@dataclass
class FirstOrderResiduals:
    consumption: np.ndarray
    investment: np.ndarray
    c_max: float
    c_mean: float
    pi_max: float
    pi_mean: float
    pi_nonzero_fraction: float

    def passed(self, tolerance):
        return self.c_max <= tolerance and self.pi_max <= tolerance

    def to_dict(self):
        return {
            'c_max': self.c_max,
            'c_mean': self.c_mean,
            'pi_max': self.pi_max,
            'pi_mean': self.pi_mean,
            'pi_nonzero_fraction': self.pi_nonzero_fraction,
        }


def first_order_residuals(pair, solution, u1, u2, lambda2, market):
    """
    Both first-order residuals of ``pair`` along the solution paths, on every
    control step; the investment residual is a norm over the hedgeable block.
    """
    grid = solution.grid
    level, Z, theta_h = solution_state(solution)
    level, Z, theta_h = level[:, :-1], Z[:, :-1, :], theta_h[:, :-1, :]
    consumption, investment = pair_on_paths(pair, solution)
    weights = terminal_weights(lambda2, grid[:-1])
    marginal = np.asarray(u2.evaluate(level, 1))
    curvature = np.asarray(u2.evaluate(level, 2))
    d1 = solution.d1

    c_residual = np.abs(np.asarray(u1.evaluate(consumption, 1)) - weights[None, :] * marginal)
    pi_vector = marginal[..., None] * theta_h + curvature[..., None] * (investment[..., :d1] + Z[..., :d1])
    pi_residual = np.linalg.norm(pi_vector, axis=-1)
    result = FirstOrderResiduals(
        consumption=c_residual,
        investment=pi_residual,
        c_max=float(c_residual.max()),
        c_mean=float(c_residual.mean()),
        pi_max=float(pi_residual.max()),
        pi_mean=float(pi_residual.mean()),
        pi_nonzero_fraction=float(np.mean(pi_residual > NONZERO_TOL)),
    )
    logger.info(f'First-order residuals: c max {result.c_max:.3e}, pi max {result.pi_max:.3e}')
    return result
