"""
Adjoint (duality) checks along the solved equilibrium paths.

With alpha_s = U2'(X_s + Y_s) the discounted process exp(-int_0^s r) alpha_s
is a martingale ending at exp(-int_0^T r) U2'(X_T + E), and the investment
condition reads alpha theta^H + beta^H = 0 for

    beta = -U2'(X + Y) theta^H + U2''(X + Y) Z^O
"""

import logging

import numpy as np

from common.reports import Estimate, ValidationReport
from equilibrium.extraction import solution_state
from market.rewards import growth_factor

logger = logging.getLogger(__name__)

GAP_SE = 3.0
WIRING_TOL = 1e-12
SCALING_TOL = 0.2
ZERO_SPREAD = 1e-12
DEFAULT_SIZES = (1000, 10000, 100000)


def _discounted_terminal(solution, u2, market):
    ensemble = solution.ensemble
    W = ensemble.W
    terminal = solution.X[:, -1] + market.terminal_payment(W[:, -1, :])
    discount = growth_factor(market, solution.grid, W, sign=-1.0)
    return discount * np.asarray(u2.evaluate(terminal, 1))


def duality_martingale_check(solution, u2, market):
    """
    Three checks on a solution carrying forward paths:

    * the mean of exp(-int_0^T r) U2'(X_T + E) against U2'(x + Y_0), within
      three standard errors;
    * alpha theta^H + beta^H, zero to rounding;
    * the largest standardized drift of the discounted alpha over the grid
      (reported only).
    """
    report = ValidationReport(subject='duality')
    level, Z, theta_h = solution_state(solution)
    d1 = solution.d1

    samples = _discounted_terminal(solution, u2, market)
    estimate = Estimate.from_samples(samples)
    target = float(u2.evaluate(float(level[:, 0].mean()), 1))
    gap = abs(estimate.mean - target)
    report.constants.update({
        'martingale_mean': estimate.mean,
        'martingale_se': estimate.se,
        'target': target,
        'gap': gap,
        'n_paths': estimate.n,
    })
    if not np.isfinite(estimate.mean):
        report.flag('martingale', 'Non-finite terminal marginal utility')
    elif gap > GAP_SE * estimate.se + WIRING_TOL:
        report.flag('martingale', 'Discounted adjoint is not a martingale within three standard errors',
                    gap=gap, se=estimate.se)

    alpha = np.asarray(u2.evaluate(level, 1))
    beta = np.zeros(Z.shape)
    beta[..., :d1] = -alpha[..., None] * theta_h
    beta[..., d1:] = np.asarray(u2.evaluate(level, 2))[..., None] * Z[..., d1:]
    residual = float(np.max(np.abs(alpha[..., None] * theta_h + beta[..., :d1])))
    report.constants['investment_residual'] = residual
    report.constants['beta_orthogonal_max'] = float(np.max(np.abs(beta[..., d1:]))) if beta.shape[-1] > d1 else 0.0
    if residual > WIRING_TOL * max(1.0, float(np.max(np.abs(alpha)))):
        report.flag('investment', 'alpha theta^H + beta^H does not vanish', residual=residual)

    grid, W = solution.grid, solution.ensemble.W
    rates = np.column_stack([market.rate(grid[k], W[:, k, :]) * (grid[k + 1] - grid[k])
                             for k in range(grid.size - 1)])
    discount = np.ones_like(alpha)
    discount[:, 1:] = np.exp(-np.cumsum(rates, axis=1))
    discounted = discount * alpha
    means = discounted.mean(axis=0)
    ses = discounted.std(axis=0, ddof=1) / np.sqrt(discounted.shape[0])
    with np.errstate(divide='ignore', invalid='ignore'):
        drift = np.where(ses > 0, np.abs(means - means[0]) / ses, 0.0)
    report.constants['martingale_drift_max_se'] = float(drift.max())

    logger.info(f'Duality check: gap {gap:.3e} (se {estimate.se:.3e}), residual {residual:.3e}, '
                f'passed={report.passed}')
    return report


def se_scaling(solution, u2, market, sizes=DEFAULT_SIZES):
    """
    Standard error of the martingale estimator on nested path prefixes; se
    sqrt(n) must stay flat within 20 percent.
    """
    samples = _discounted_terminal(solution, u2, market)
    sizes = [int(n) for n in sizes if n <= samples.size]
    rows = []
    for n in sizes:
        estimate = Estimate.from_samples(samples[:n])
        rows.append({'n': n, 'se': estimate.se, 'scaled': estimate.se * np.sqrt(n)})
    floor = ZERO_SPREAD * max(1.0, abs(float(samples.mean())))
    scaled = [row['scaled'] for row in rows if row['scaled'] > floor]
    if len(scaled) < 2:
        return {'rows': rows, 'ratio': None, 'passed': True, 'note': 'degenerate or too few sizes'}
    ratio = max(scaled) / min(scaled)
    return {'rows': rows, 'ratio': ratio, 'passed': bool(ratio <= 1.0 + SCALING_TOL)}
