"""
Euler-Maruyama simulation of wealth and of perturbation processes.

    dX = (r X + pi . theta + e - c) dt + pi . dW

The linear term r X is stepped with its exact growth factor exp(r dt), so
the scheme is exact for deterministic wealth and reduces to plain Euler
when r = 0.
"""

import logging
from dataclasses import dataclass

import numpy as np

from common.exceptions import DomainError, GridError
from market.ensemble import GRID_TOL, check_finite

logger = logging.getLogger(__name__)


@dataclass
class WealthPaths:
    """Wealth on every grid point and the controls used on every step"""
    grid: np.ndarray
    wealth: np.ndarray
    consumption: np.ndarray
    investment: np.ndarray
    W: np.ndarray

    @property
    def terminal(self):
        return self.wealth[:, -1]


@dataclass
class PerturbationPaths:
    grid: np.ndarray
    xi: np.ndarray
    ensemble: object

    @property
    def terminal(self):
        return self.xi[:, -1]


def _state(ensemble, w0):
    W = ensemble.W
    if w0 is None:
        return W
    w0 = np.asarray(w0, dtype=float)
    if w0.shape != (ensemble.n_paths, ensemble.d):
        raise DomainError('Initial Brownian state must have shape (n_paths, d)', shape=w0.shape)
    return W + w0[:, None, :]


def _anchor_index(grid, overlay):
    if overlay is None:
        return None
    if overlay.start <= grid[0] + GRID_TOL:
        return 0
    hits = np.flatnonzero(np.abs(grid - overlay.start) <= GRID_TOL * max(1.0, overlay.start))
    if hits.size == 0:
        raise GridError('Overlay start is not a grid point', t=overlay.start)
    return int(hits[0])


def simulate_wealth(market, strategy, ensemble, x0, overlay=None, w0=None, t0=None):
    """
    Simulate wealth under ``strategy`` on the ensemble's grid.

    Args:
        market (MarketModel): coefficients
        strategy (StrategyPair): reference pair
        ensemble (PathEnsemble): grid and increments; the grid starts at t0
        x0: initial wealth, scalar or per path
        overlay (Overlay): optional open-loop shift of the reference controls
        w0: Brownian state at the first grid point, per path (default 0)
        t0 (float): expected first grid time

    Returns:
        WealthPaths of the (possibly perturbed) pair
    """
    grid = ensemble.grid
    if t0 is not None and abs(grid[0] - t0) > GRID_TOL * max(1.0, abs(t0)):
        raise GridError('Ensemble grid does not start at t0', t0=t0, start=grid[0])
    n_paths, n_steps, d = ensemble.dW.shape
    x0 = np.broadcast_to(np.asarray(x0, dtype=float), (n_paths,))
    if not np.all(np.isfinite(x0)):
        raise DomainError('Initial wealth must be finite')

    W = _state(ensemble, w0)
    dt = ensemble.steps
    wealth = np.empty((n_paths, n_steps + 1))
    wealth[:, 0] = x0
    consumption = np.empty((n_paths, n_steps))
    investment = np.empty((n_paths, n_steps, d))
    reference = x0.copy() if overlay is not None else None
    anchor = _anchor_index(grid, overlay)

    for k in range(n_steps):
        t = grid[k]
        w = W[:, k, :]
        state = reference if overlay is not None else wealth[:, k]
        c, pi = strategy.controls(t, state, w, step=k)
        rate = market.rate(t, w)
        theta = market.market_price(t, w)
        income = market.income_rate(t, w)
        if overlay is not None:
            shift_c, shift_pi = overlay.shift(t, W[:, anchor, :], n_paths, d)
            reference = np.exp(rate * dt[k]) * reference + (np.sum(pi * theta, axis=1) + income - c) * dt[k] \
                + np.sum(pi * ensemble.dW[:, k, :], axis=1)
            c = c + shift_c
            pi = pi + shift_pi
        x = wealth[:, k]
        wealth[:, k + 1] = np.exp(rate * dt[k]) * x + (np.sum(pi * theta, axis=1) + income - c) * dt[k] \
            + np.sum(pi * ensemble.dW[:, k, :], axis=1)
        consumption[:, k] = c
        investment[:, k, :] = pi
        check_finite(wealth[:, k + 1], k, 'wealth')
    return WealthPaths(grid=grid, wealth=wealth, consumption=consumption, investment=investment, W=W)


def simulate_perturbation(market, overlay, ensemble, w0=None):
    """
    Euler scheme for d xi = r xi ds + b . dS^H - a ds, xi = 0 up to the
    overlay start; spike windows not on the grid are refined in first.
    """
    for point in overlay.breakpoints():
        if point > ensemble.grid[-1] + GRID_TOL:
            raise DomainError('Window ends after the horizon', end=point, horizon=ensemble.grid[-1])
    missing = [p for p in overlay.breakpoints() if not ensemble.contains(p)]
    if missing:
        logger.warning(f'Refining grid to include window endpoints {missing}')
        ensemble = ensemble.refine(missing)

    grid = ensemble.grid
    n_paths, n_steps, d = ensemble.dW.shape
    W = _state(ensemble, w0)
    dt = ensemble.steps
    anchor = _anchor_index(grid, overlay)
    xi = np.zeros((n_paths, n_steps + 1))
    for k in range(anchor, n_steps):
        t = grid[k]
        w = W[:, k, :]
        shift_c, shift_pi = overlay.shift(t, W[:, anchor, :], n_paths, d)
        rate = market.rate(t, w)
        theta = market.market_price(t, w)
        xi[:, k + 1] = np.exp(rate * dt[k]) * xi[:, k] + (np.sum(shift_pi * theta, axis=1) - shift_c) * dt[k] \
            + np.sum(shift_pi * ensemble.dW[:, k, :], axis=1)
        check_finite(xi[:, k + 1], k, 'perturbation')
    return PerturbationPaths(grid=grid, xi=xi, ensemble=ensemble)
