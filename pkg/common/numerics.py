"""
Small numerical helpers shared across apps
"""

import math

import numpy as np

from common.exceptions import DomainError


def uniform_grid(t0, t1, n_steps):
    if n_steps < 1:
        raise DomainError('n_steps must be positive', n_steps=n_steps)
    return np.linspace(t0, t1, n_steps + 1)


def rk4_backward(rhs, grid, terminal, max_step):
    """
    Integrate dy/ds = rhs(s, y) backward from y(grid[-1]) = terminal.

    Every grid interval is split into ceil(width / max_step) classical RK4
    substeps; values are returned exactly at the grid nodes.
    """
    grid = np.asarray(grid, dtype=float)
    values = np.empty(grid.size)
    values[-1] = terminal
    y = float(terminal)
    for k in range(grid.size - 1, 0, -1):
        s_hi, s_lo = grid[k], grid[k - 1]
        n_sub = max(1, math.ceil((s_hi - s_lo) / max_step - 1e-12))
        step = (s_hi - s_lo) / n_sub
        s = s_hi
        for _ in range(n_sub):
            k1 = rhs(s, y)
            k2 = rhs(s - step / 2, y - step / 2 * k1)
            k3 = rhs(s - step / 2, y - step / 2 * k2)
            k4 = rhs(s - step, y - step * k3)
            y = y - step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            s = s - step
        values[k - 1] = y
    return values


def weighted_linear_fit(x, y, se=None):
    """
    Least-squares line y = a + b x. With standard errors the fit is weighted
    by 1/se^2 and the intercept error comes from the normal equations.

    Returns (intercept, slope, intercept_se).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    design = np.column_stack([np.ones_like(x), x])
    if se is None or not np.all(np.asarray(se) > 0):
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        residual = y - design @ coef
        dof = max(x.size - 2, 1)
        sigma2 = float(residual @ residual) / dof
        cov = sigma2 * np.linalg.pinv(design.T @ design)
    else:
        weights = 1.0 / np.asarray(se, dtype=float) ** 2
        normal = design.T @ (design * weights[:, None])
        coef = np.linalg.solve(normal, design.T @ (weights * y))
        cov = np.linalg.inv(normal)
    return float(coef[0]), float(coef[1]), float(math.sqrt(max(cov[0, 0], 0.0)))


def loglog_slope(x, y):
    """Slope of log y against log x; None when any y is not positive"""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0) or not np.all(np.isfinite(y)):
        return None
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)
