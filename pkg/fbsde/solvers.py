"""
Backward solvers for the transformed BSDE

    dYt = [ rho h Yt + theta^H . Zt^H + (g2/2)|Zt^O|^2 - |theta^H|^2 / (2 g2)
            - h e - (h/g1) log(rho lambda2(s, T)) + r/g2 ] ds + Zt . dW,
    Yt_T = E,   rho = g2 / g1.

Deterministic coefficients reduce it to an ODE (Zt = 0), integrated by RK4.
Coefficients that are bounded functions of (t, W_t) go through least-squares
Monte Carlo on polynomial features of the standardized Brownian state.
"""

import logging

import numpy as np
from sklearn.preprocessing import PolynomialFeatures

from common.conf import engine_setting
from common.exceptions import DomainError, GridError, NumericError
from common.numerics import rk4_backward
from fbsde.hschedule import HSchedule
from fbsde.solution import DETERMINISTIC, LSMC, FbsdeSolution, RegressionStore

logger = logging.getLogger(__name__)

GRID_TOL = 1e-12


def constant_rate(market):
    if not market.has_constant_rate:
        raise DomainError('The exponential pipeline needs a constant interest rate')
    r = market.r.value_at(0.0)
    if r < 0:
        raise DomainError('Interest rate must be nonnegative', r=r)
    return r


def log_weight(lambda2, s, rho):
    """log(rho lambda2(s, T)), elementwise in s"""
    weight = np.asarray(lambda2.to_terminal(s), dtype=float)
    if np.any(weight <= 0):
        raise DomainError('lambda2(s, T) must be positive', s=s, worst=float(np.min(weight)))
    value = np.log(rho * weight)
    return float(value) if np.ndim(value) == 0 else value


def _check_grid(grid, horizon):
    grid = np.asarray(grid, dtype=float)
    if abs(grid[0]) > GRID_TOL or abs(grid[-1] - horizon) > GRID_TOL * max(1.0, horizon):
        raise GridError('Solver grid must run from 0 to T', start=grid[0], end=grid[-1], horizon=horizon)
    return grid


def solve_tilde_bsde_deterministic(market, lambda2, gamma1, gamma2, grid, ode_step=None):
    """
    Ytilde for deterministic r, theta, e and constant E, as the backward ODE
    driven by the same terms with Ztilde = 0.
    """
    if not market.is_deterministic:
        raise DomainError('Deterministic solver needs deterministic coefficients')
    grid = _check_grid(grid, market.horizon)
    r = constant_rate(market)
    ode_step = float(ode_step or engine_setting('ODE_STEP'))
    schedule = HSchedule(grid, r, gamma1, gamma2, market.horizon)
    rho = schedule.rho
    terminal = market.terminal.value_at(market.horizon)
    log_weight(lambda2, grid, rho)

    def rhs(s, y):
        h = schedule.at(s)
        theta_h = market.hedgeable_price_at(s)
        return rho * h * y - float(theta_h @ theta_h) / (2 * gamma2) - h * market.income.value_at(s) \
            - h / gamma1 * log_weight(lambda2, s, rho) + r / gamma2

    ytilde = rk4_backward(rhs, grid, terminal, ode_step)
    ytilde[-1] = terminal
    if not np.all(np.isfinite(ytilde)):
        raise NumericError('Backward ODE produced non-finite values')
    logger.info(f'Deterministic backward ODE solved: Ytilde_0={ytilde[0]:.10g}, h(0)={schedule.values[0]:.10g}')
    return FbsdeSolution(
        grid=grid, schedule=schedule, provenance=DETERMINISTIC,
        gamma1=float(gamma1), gamma2=float(gamma2), d=market.d, d1=market.d1,
        ytilde=ytilde, ztilde=np.zeros((grid.size, market.d)), lambda2=lambda2,
        diagnostics={'ode_step': ode_step, 'h_ode_residual': schedule.ode_residual()},
    )


def _truncate(z_orthogonal, z_max):
    """Scale rows with |z| > z_max back onto the sphere; returns (values, hit mask)"""
    norms = np.linalg.norm(z_orthogonal, axis=1)
    hits = norms > z_max
    if np.any(hits):
        z_orthogonal = z_orthogonal.copy()
        z_orthogonal[hits] *= (z_max / norms[hits])[:, None]
    return z_orthogonal, hits


class _StepRegression:
    """Ridge least squares on one time step's basis matrix"""

    def __init__(self, basis, ridge, condition_limit, step):
        n_paths, n_features = basis.shape
        self.basis = basis
        self.n_paths = n_paths
        self.gram = basis.T @ basis / n_paths + ridge * np.eye(n_features)
        self.condition = float(np.linalg.cond(self.gram))
        if not np.isfinite(self.condition) or self.condition > condition_limit:
            raise NumericError('Ill-conditioned regression', step=step, condition=self.condition)

    def coefficients(self, target):
        return np.linalg.solve(self.gram, self.basis.T @ target / self.n_paths)


def solve_tilde_bsde_lsmc(market, lambda2, gamma1, gamma2, ensemble, degree=None, ridge=None, z_max=None,
                          condition_limit=None, truncation_limit=None, strict=False):
    """
    Least-squares Monte Carlo for the transformed BSDE.

    Going backward over the ensemble's grid, Ztilde_k is the projection of
    (Yt_{k+1} - E_k[Yt_{k+1}]) dW_k / dt_k and Ytilde_k the projection of
    Yt_{k+1} - f(t_k, Yt_{k+1}, Zt_k) dt_k, both on the total-degree
    polynomial features of W_{t_k} scaled by its cross-sectional deviation.
    |Zt^O| is truncated at z_max inside the quadratic term.

    Args:
        market (MarketModel): constant r; theta, e, E bounded functions of (t, W_t)
        lambda2 (DiscountFunction): terminal discount
        gamma1, gamma2 (float): risk aversions of U1 and U2
        ensemble (PathEnsemble): regression paths, grid from 0 to T
        strict (bool): a truncation hit-rate above the limit raises instead of warning

    Returns:
        FbsdeSolution with per-path Ytilde, Ztilde and the stored coefficients
    """
    grid = _check_grid(ensemble.grid, market.horizon)
    r = constant_rate(market)
    degree = int(degree or engine_setting('BASIS_DEGREE'))
    ridge = float(engine_setting('RIDGE') if ridge is None else ridge)
    z_max = float(z_max or engine_setting('Z_MAX'))
    condition_limit = float(condition_limit or engine_setting('CONDITION_LIMIT'))
    truncation_limit = float(engine_setting('TRUNCATION_LIMIT') if truncation_limit is None else truncation_limit)

    schedule = HSchedule(grid, r, gamma1, gamma2, market.horizon)
    rho = schedule.rho
    n_paths, n_steps, d = ensemble.dW.shape
    d1 = market.d1
    W = ensemble.W
    dt = ensemble.steps
    featurizer = PolynomialFeatures(degree=degree).fit(np.zeros((1, d)))
    n_features = featurizer.n_output_features_

    ytilde = np.empty((n_paths, n_steps + 1))
    ztilde = np.zeros((n_paths, n_steps + 1, d))
    ytilde[:, -1] = market.terminal_payment(W[:, -1, :])
    scales = np.ones((n_steps, d))
    y_coef = np.zeros((n_steps, n_features))
    z_coef = np.zeros((n_steps, n_features, d))
    r_squared = np.full(n_steps, np.nan)
    conditions = np.ones(n_steps)
    hits = 0

    for k in range(n_steps - 1, -1, -1):
        t = grid[k]
        w = W[:, k, :]
        y_next = ytilde[:, k + 1]
        spread = w.std(axis=0)
        if np.all(spread == 0):
            # degenerate state: conditional expectations are plain means
            z = np.broadcast_to(np.mean((y_next - y_next.mean())[:, None] * ensemble.dW[:, k, :], axis=0) / dt[k],
                                (n_paths, d))
            z_coef[k, 0, :] = z[0]
            fitted = None
        else:
            scales[k] = np.where(spread > 0, spread, 1.0)
            regression = _StepRegression(featurizer.transform(w / scales[k]), ridge, condition_limit, k)
            conditions[k] = regression.condition
            centred = y_next - regression.basis @ regression.coefficients(y_next)
            z_coef[k] = regression.coefficients(centred[:, None] * ensemble.dW[:, k, :] / dt[k])
            z = regression.basis @ z_coef[k]
            fitted = regression

        theta_h = market.hedgeable_price(t, w)
        z_orthogonal, hit_mask = _truncate(z[:, d1:], z_max)
        hits += int(hit_mask.sum())
        h = schedule.values[k]
        driver = rho * h * y_next + np.sum(theta_h * z[:, :d1], axis=1) \
            + gamma2 / 2 * np.sum(z_orthogonal ** 2, axis=1) - np.sum(theta_h ** 2, axis=1) / (2 * gamma2) \
            - h * market.income_rate(t, w) - h / gamma1 * log_weight(lambda2, t, rho) + r / gamma2
        target = y_next - driver * dt[k]
        if fitted is None:
            y_coef[k, 0] = target.mean()
            ytilde[:, k] = y_coef[k, 0]
        else:
            y_coef[k] = fitted.coefficients(target)
            ytilde[:, k] = fitted.basis @ y_coef[k]
            total = np.sum((target - target.mean()) ** 2)
            if total > 0:
                r_squared[k] = 1.0 - np.sum((target - ytilde[:, k]) ** 2) / total
        ztilde[:, k, :] = z
        if not np.all(np.isfinite(ytilde[:, k])):
            raise NumericError('LSMC produced non-finite values', step=k)

    ztilde[:, -1, :] = ztilde[:, -2, :]
    hit_rate = hits / (n_paths * n_steps) if d1 < d else 0.0
    if hit_rate > truncation_limit:
        message = f'Ztilde^O truncation hit-rate {hit_rate:.4f} exceeds {truncation_limit}'
        if strict:
            raise NumericError(message, hit_rate=hit_rate, z_max=z_max)
        logger.warning(message)

    finite_r2 = r_squared[np.isfinite(r_squared)]
    diagnostics = {
        'basis_degree': degree,
        'n_features': int(n_features),
        'ridge': ridge,
        'z_max': z_max,
        'truncation_hit_rate': float(hit_rate),
        'max_condition': float(conditions.max()),
        'r_squared_min': float(finite_r2.min()) if finite_r2.size else None,
        'r_squared_mean': float(finite_r2.mean()) if finite_r2.size else None,
        'n_paths': int(n_paths),
        'h_ode_residual': schedule.ode_residual(),
    }
    logger.info(f'LSMC solved over {n_steps} steps with {n_paths} paths: Ytilde_0={ytilde[0, 0]:.10g}, '
                f'hit-rate={hit_rate:.4g}')
    store = RegressionStore(featurizer=featurizer, scales=scales, y_coef=y_coef, z_coef=z_coef,
                            terminal=market.terminal_payment)
    return FbsdeSolution(
        grid=grid, schedule=schedule, provenance=LSMC,
        gamma1=float(gamma1), gamma2=float(gamma2), d=d, d1=d1,
        ytilde=ytilde, ztilde=ztilde, regression=store, lambda2=lambda2, diagnostics=diagnostics,
    )
