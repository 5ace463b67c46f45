"""
Monte Carlo evaluation of the time-inconsistent reward

    R(c, pi; t, x) = E_t[ int_t^T lambda1(t, s) U1(c_s) ds + lambda2(t, T) U2(X_T + E) ]

and of the time-consistent reward with running weight 1 / lambda2(s, T) and
terminal weight 1.

Controls are constant on each step, so the running integral weights step k
by dt_k (w(s_k) + w(s_{k+1})) / 2, the trapezoidal rule for the discount
weight. Conditional rewards at t > 0 branch ``n_inner`` inner paths from the
state of every outer path at t.
"""

import logging
from dataclasses import dataclass

import numpy as np

from common.conf import engine_setting
from common.exceptions import DomainError, NumericError, StateError
from common.reports import Estimate
from market.ensemble import inner_ensemble
from market.simulation import simulate_wealth

logger = logging.getLogger(__name__)

OUTER_CHUNK = 256


@dataclass
class RewardEstimate:
    """Per (outer) path values and their aggregate"""
    per_path: np.ndarray
    estimate: Estimate

    @property
    def mean(self):
        return self.estimate.mean

    @property
    def se(self):
        return self.estimate.se

    def to_dict(self):
        return self.estimate.to_dict()


def step_weights(weight, grid):
    """dt_k (w(s_k) + w(s_{k+1})) / 2 for a weight function of s"""
    values = np.asarray(weight(grid), dtype=float)
    return np.diff(grid) * (values[:-1] + values[1:]) / 2.0


def time_inconsistent_weights(lambda1, lambda2, t, grid):
    running = step_weights(lambda s: lambda1(np.full_like(s, t), s), grid)
    return running, float(lambda2(t, lambda2.horizon))


def time_consistent_weights(lambda2, grid):
    terminal_values = np.asarray(lambda2.to_terminal(grid), dtype=float)
    if np.any(terminal_values <= 0):
        raise DomainError('lambda2(s, T) must be positive', worst=float(terminal_values.min()))
    return step_weights(lambda s: 1.0 / lambda2.to_terminal(s), grid), 1.0


def path_rewards(u1, u2, running, terminal_weight, consumption, terminal_wealth):
    """Per-path sum_k running_k U1(c_k) + terminal_weight U2(terminal wealth)"""
    running_utility = np.asarray(u1.evaluate(consumption, 0)) @ running
    terminal_utility = terminal_weight * np.asarray(u2.evaluate(terminal_wealth, 0))
    values = running_utility + terminal_utility
    bad = ~np.isfinite(values)
    if np.any(bad):
        raise NumericError('Non-finite utility value', path=int(np.flatnonzero(bad)[0]))
    return values


def _outer_state(ensemble, t, x_t, w_t):
    index = ensemble.index_of(t)
    x_t = np.broadcast_to(np.asarray(x_t, dtype=float), (ensemble.n_paths,))
    if w_t is None:
        w_t = ensemble.W[:, index, :]
    return index, x_t, np.asarray(w_t, dtype=float)


def _branched(evaluate, market, strategy, t, x_t, ensemble, overlay, w_t, n_inner):
    """
    Per outer path values of ``evaluate(paths)``: a plain path value at the
    first grid time, the mean over ``n_inner`` branched inner paths later on.
    Trailing axes of the evaluated values are kept.
    """
    grid = ensemble.grid
    if abs(t - grid[0]) <= 1e-12:
        return evaluate(simulate_wealth(market, strategy, ensemble, x_t, overlay=overlay))

    if not strategy.feedback:
        raise StateError('Conditional values need a feedback strategy')
    n_inner = int(n_inner or engine_setting('INNER_PATHS'))
    index, x_t, w_t = _outer_state(ensemble, t, x_t, w_t)
    inner_grid = grid[index:]
    conditional = None
    for chunk, start in enumerate(range(0, ensemble.n_paths, OUTER_CHUNK)):
        stop = min(start + OUTER_CHUNK, ensemble.n_paths)
        n_outer = stop - start
        inner = inner_ensemble(ensemble.seed, inner_grid, n_outer, n_inner, ensemble.d, index, chunk)
        x0 = np.repeat(x_t[start:stop], n_inner)
        w0 = np.repeat(w_t[start:stop], n_inner, axis=0)
        paths = simulate_wealth(market, strategy, inner, x0, overlay=overlay, w0=w0)
        values = np.asarray(evaluate(paths))
        block = values.reshape(n_outer, n_inner, *values.shape[1:]).mean(axis=1)
        if conditional is None:
            conditional = np.empty((ensemble.n_paths, *block.shape[1:]))
        conditional[start:stop] = block
    return conditional


def _reward(weights, u1, u2, market, strategy, t, x_t, ensemble, overlay, w_t, n_inner):
    def evaluate(paths):
        running, terminal_weight = weights(paths.grid)
        terminal = paths.terminal + market.terminal_payment(paths.W[:, -1, :])
        return path_rewards(u1, u2, running, terminal_weight, paths.consumption, terminal)

    values = _branched(evaluate, market, strategy, t, x_t, ensemble, overlay, w_t, n_inner)
    return RewardEstimate(values, Estimate.from_samples(values))


def reward_R(lambda1, lambda2, u1, u2, market, strategy, t, x_t, ensemble, overlay=None, w_t=None, n_inner=None):
    """
    Time-inconsistent reward seen from time t.

    At the first grid time x_t is the initial wealth and the estimate is a
    plain path average. At a later grid time x_t (and w_t, defaulting to the
    ensemble's own Brownian state) is given per outer path and the estimate
    is conditional, by branched sub-simulation.
    """
    return _reward(lambda grid: time_inconsistent_weights(lambda1, lambda2, t, grid),
                   u1, u2, market, strategy, t, x_t, ensemble, overlay, w_t, n_inner)


def reward_C(lambda2, u1, u2, market, strategy, x, ensemble, t=None, overlay=None, w_t=None, n_inner=None):
    """Time-consistent reward with running weight 1 / lambda2(s, T)"""
    t = ensemble.grid[0] if t is None else t
    return _reward(lambda grid: time_consistent_weights(lambda2, grid),
                   u1, u2, market, strategy, t, x, ensemble, overlay, w_t, n_inner)


def growth_factor(market, grid, W, sign=1.0):
    """exp(sign * int r ds) along every path of W, shape (n_paths,)"""
    dt = np.diff(grid)
    integral = np.zeros(W.shape[0])
    for k in range(dt.size):
        integral += market.rate(grid[k], W[:, k, :]) * dt[k]
    return np.exp(sign * integral)


def _grown_marginal(u2, market, paths):
    terminal = paths.terminal + market.terminal_payment(paths.W[:, -1, :])
    return growth_factor(market, paths.grid, paths.W) * np.asarray(u2.evaluate(terminal, 1))


def terminal_marginal(u2, market, strategy, t, x_t, ensemble, w_t=None, n_inner=None):
    """
    E_t[exp(int_t^T r ds) U2'(X_T + E)] per outer path, the sensitivity of
    the terminal utility to wealth added at t.
    """
    def evaluate(paths):
        return _grown_marginal(u2, market, paths)

    values = _branched(evaluate, market, strategy, t, x_t, ensemble, None, w_t, n_inner)
    return RewardEstimate(values, Estimate.from_samples(values))


def weighted_terminal_marginal(u2, market, strategy, t, x_t, ensemble, weights, w_t=None, n_inner=None):
    """
    E_t[exp(int_t^T r ds) U2'(X_T + E) w] per outer path for every column w
    of ``weights(paths)``, a function of the (inner) paths started at t
    returning shape (n_paths, m). The result has shape (n_outer, m).
    """
    def evaluate(paths):
        columns = np.asarray(weights(paths), dtype=float)
        return _grown_marginal(u2, market, paths)[:, None] * columns

    values = _branched(evaluate, market, strategy, t, x_t, ensemble, None, w_t, n_inner)
    if not np.all(np.isfinite(values)):
        raise NumericError('Non-finite weighted terminal marginal', t=t)
    return values
