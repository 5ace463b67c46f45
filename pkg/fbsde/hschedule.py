"""
The deterministic scaling h(t) of the exponential-utility transform, solving

    h'(t) = h(t) (rho h(t) - r),   h(T) = 1,   rho = gamma2 / gamma1.
"""

import logging

import numpy as np

from common.exceptions import DomainError, NumericError
from common.numerics import rk4_backward

logger = logging.getLogger(__name__)

# below this rate the r = 0 branch is used; the two closed forms agree to O(r)
ZERO_RATE = 1e-12
DIFFERENCE_STEP = 1e-5


def h_closed_form(t, r, gamma1, gamma2, horizon):
    """
    h(t) = 1 / (1 + rho (T - t))                        when r = 0
    h(t) = r / (rho - (rho - r) exp(-r (T - t)))        when r > 0
    """
    if r < 0:
        raise DomainError('The transform needs a nonnegative constant rate', r=r)
    if not gamma1 > 0 or not gamma2 > 0:
        raise DomainError('Risk aversions must be positive', gamma1=gamma1, gamma2=gamma2)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < -1e-12) or np.any(t_arr > horizon + 1e-12):
        raise DomainError('h is defined on [0, T]', horizon=horizon)
    rho = gamma2 / gamma1
    remaining = np.maximum(horizon - t_arr, 0.0)
    if r <= ZERO_RATE:
        denominator = 1.0 + rho * remaining
        numerator = np.ones_like(denominator)
    else:
        denominator = rho - (rho - r) * np.exp(-r * remaining)
        numerator = np.full_like(denominator, r)
    if np.any(denominator <= 0):
        raise NumericError('h denominator is not positive', r=r, rho=rho)
    value = numerator / denominator
    return float(value) if np.ndim(value) == 0 else value


class HSchedule:
    """h on a grid, with the closed form available at any time in [0, T]"""

    def __init__(self, grid, r, gamma1, gamma2, horizon):
        self.grid = np.asarray(grid, dtype=float)
        self.r = float(r)
        self.gamma1 = float(gamma1)
        self.gamma2 = float(gamma2)
        self.horizon = float(horizon)
        self.values = np.asarray(h_closed_form(self.grid, self.r, self.gamma1, self.gamma2, self.horizon))
        if self.grid[-1] == self.horizon:
            self.values[-1] = 1.0

    @property
    def rho(self):
        return self.gamma2 / self.gamma1

    def at(self, t):
        return h_closed_form(t, self.r, self.gamma1, self.gamma2, self.horizon)

    def derivative(self, t):
        h = self.at(t)
        return h * (self.rho * h - self.r)

    def ode_residual(self):
        """max over the grid of |central difference of h - h (rho h - r)|"""
        step = DIFFERENCE_STEP
        lo = np.maximum(self.grid - step, 0.0)
        hi = np.minimum(self.grid + step, self.horizon)
        slope = (self.at(hi) - self.at(lo)) / (hi - lo)
        return float(np.max(np.abs(slope - self.derivative(self.grid))))

    def rk4_gap(self, max_step=1e-4):
        """max |closed form - RK4 integration backward from h(T) = 1| on the grid"""
        rho, r = self.rho, self.r
        grid = self.grid if self.grid[-1] == self.horizon else np.append(self.grid, self.horizon)
        integrated = rk4_backward(lambda s, h: h * (rho * h - r), grid, 1.0, max_step)[:self.grid.size]
        return float(np.max(np.abs(integrated - self.values)))

    def to_dict(self):
        return {'r': self.r, 'gamma1': self.gamma1, 'gamma2': self.gamma2, 'T': self.horizon,
                'h0': float(self.values[0])}


def h_at_zero(r, gamma1, gamma2, horizon):
    return h_closed_form(0.0, r, gamma1, gamma2, horizon)


def continuity_gap(grid, gamma1, gamma2, horizon, small_rate=1e-6):
    """max |h(t; small r) - h(t; 0)| over the grid"""
    return float(np.max(np.abs(
        np.asarray(h_closed_form(grid, small_rate, gamma1, gamma2, horizon))
        - np.asarray(h_closed_form(grid, 0.0, gamma1, gamma2, horizon))
    )))
