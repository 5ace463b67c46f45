"""
Discount functions lambda(t, s) on the triangle 0 <= t <= s <= T.

Every family returns exactly 1 on the diagonal s = t.
"""

import logging
import math

import numpy as np

from common.exceptions import DomainError

logger = logging.getLogger(__name__)

TRIANGLE_TOL = 1e-12


class DiscountFunction:
    kind = None

    def __init__(self, horizon):
        if not horizon > 0 or not math.isfinite(horizon):
            raise DomainError('Discount horizon must be positive and finite', horizon=horizon)
        self.horizon = float(horizon)

    def _delay_factor(self, t, tau):
        """lambda at (t, t + tau) for tau >= 0"""
        raise NotImplementedError

    def __call__(self, t, s):
        t_arr = np.asarray(t, dtype=float)
        s_arr = np.asarray(s, dtype=float)
        if np.any(t_arr < -TRIANGLE_TOL) or np.any(s_arr > self.horizon + TRIANGLE_TOL) \
                or np.any(s_arr < t_arr - TRIANGLE_TOL):
            raise DomainError('Discount evaluated outside 0 <= t <= s <= T', horizon=self.horizon)
        tau = np.maximum(s_arr - t_arr, 0.0)
        value = np.where(tau == 0.0, 1.0, self._delay_factor(t_arr, tau))
        return float(value) if np.ndim(value) == 0 else value

    def to_terminal(self, s):
        """lambda(s, T), the weight the terminal payoff carries seen from s"""
        return self(s, self.horizon)

    @staticmethod
    def induced(lambda2):
        return InducedDiscount(lambda2)

    def params(self):
        return {}

    def to_dict(self):
        return {'kind': self.kind, 'horizon': self.horizon, **self.params()}

    def __repr__(self):
        details = ', '.join(f'{key}={value}' for key, value in self.params().items())
        return f'{type(self).__name__}({details})'


class ExponentialDiscount(DiscountFunction):
    kind = 'exponential'

    def __init__(self, horizon, delta):
        super().__init__(horizon)
        if not delta >= 0:
            raise DomainError('Exponential discount needs delta >= 0', delta=delta)
        self.delta = float(delta)

    def _delay_factor(self, t, tau):
        return np.exp(-self.delta * tau)

    def params(self):
        return {'delta': self.delta}


class MixtureDiscount(DiscountFunction):
    """alpha e^{-delta tau} + (1 - alpha) e^{-gamma_rate tau}"""
    kind = 'mixture'

    def __init__(self, horizon, alpha, delta, gamma_rate):
        super().__init__(horizon)
        if not 0 < alpha < 1:
            raise DomainError('Mixture weight must lie in (0, 1)', alpha=alpha)
        if not delta > 0 or not gamma_rate > 0:
            raise DomainError('Mixture rates must be positive', delta=delta, gamma_rate=gamma_rate)
        if delta == gamma_rate:
            raise DomainError('Mixture rates must differ', delta=delta)
        self.alpha = float(alpha)
        self.delta = float(delta)
        self.gamma_rate = float(gamma_rate)

    def _delay_factor(self, t, tau):
        return self.alpha * np.exp(-self.delta * tau) + (1.0 - self.alpha) * np.exp(-self.gamma_rate * tau)

    def params(self):
        return {'alpha': self.alpha, 'delta': self.delta, 'gamma_rate': self.gamma_rate}


class QuasiExponentialDiscount(DiscountFunction):
    """(1 + alpha tau) e^{-delta tau}"""
    kind = 'quasi_exponential'

    def __init__(self, horizon, alpha, delta):
        super().__init__(horizon)
        if not alpha > 0 or not delta > 0:
            raise DomainError('Quasi-exponential discount needs alpha > 0 and delta > 0',
                              alpha=alpha, delta=delta)
        self.alpha = float(alpha)
        self.delta = float(delta)

    def _delay_factor(self, t, tau):
        return (1.0 + self.alpha * tau) * np.exp(-self.delta * tau)

    def params(self):
        return {'alpha': self.alpha, 'delta': self.delta}


class HyperbolicDiscount(DiscountFunction):
    kind = 'hyperbolic'

    def __init__(self, horizon, delta):
        super().__init__(horizon)
        if not delta > 0:
            raise DomainError('Hyperbolic discount needs delta > 0', delta=delta)
        self.delta = float(delta)

    def _delay_factor(self, t, tau):
        return 1.0 / (1.0 + self.delta * tau)

    def params(self):
        return {'delta': self.delta}


class RefDependentDiscount(DiscountFunction):
    """
    e^{-delta(t) (s - t)} with the rate depending on the evaluation time,
    given as a table of (time, rate) pairs interpolated linearly.
    """
    kind = 'ref_dependent'

    def __init__(self, horizon, times, rates):
        super().__init__(horizon)
        times = np.asarray(times, dtype=float)
        rates = np.asarray(rates, dtype=float)
        if times.ndim != 1 or times.shape != rates.shape or times.size < 2:
            raise DomainError('Rate table needs matching 1-d times and rates with at least 2 rows')
        if not np.all(np.diff(times) > 0):
            raise DomainError('Rate table times must be strictly increasing')
        if times[0] > 0 or times[-1] < self.horizon:
            raise DomainError('Rate table must cover [0, T]', first=times[0], last=times[-1])
        if not np.all(np.isfinite(rates)) or np.any(rates < 0):
            raise DomainError('Rate table values must be finite and nonnegative')
        self.times = times
        self.rates = rates

    def rate(self, t):
        return np.interp(t, self.times, self.rates)

    def _delay_factor(self, t, tau):
        return np.exp(-self.rate(t) * tau)

    def params(self):
        return {'times': self.times.tolist(), 'rates': self.rates.tolist()}


class InducedDiscount(DiscountFunction):
    """lambda2(t, T) / lambda2(s, T), the discount making the equivalent problem time-consistent"""
    kind = 'induced'

    def __init__(self, lambda2):
        super().__init__(lambda2.horizon)
        self.lambda2 = lambda2

    def _delay_factor(self, t, tau):
        return self.lambda2.to_terminal(t) / self.lambda2.to_terminal(np.minimum(t + tau, self.horizon))

    def params(self):
        return {'lambda2': self.lambda2.to_dict()}
