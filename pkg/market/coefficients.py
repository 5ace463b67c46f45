"""
Coefficient processes of the market model.

A coefficient is evaluated at a time t and per-path Brownian states
w of shape (n_paths, d); it returns shape (n_paths,) for scalar coefficients
and (n_paths, dim) for vector ones. Three forms exist: constant, a
deterministic table in t interpolated linearly, and a bounded function of
(t, W_t).
"""

import logging
from dataclasses import dataclass

import numpy as np

from common.conf import engine_setting
from common.exceptions import DomainError, RangeError

logger = logging.getLogger(__name__)


class Coefficient:
    is_deterministic = True

    def __init__(self, bound, dim=None):
        if not bound >= 0 or not np.isfinite(bound):
            raise DomainError('Declared coefficient bound must be finite and nonnegative', bound=bound)
        self.bound = float(bound)
        self.dim = dim

    def _values(self, t, w):
        raise NotImplementedError

    def value_at(self, t):
        """Deterministic value at time t; float or (dim,) array"""
        if not self.is_deterministic:
            raise DomainError('Coefficient depends on the Brownian state')
        raw = np.asarray(self._values(t, np.zeros((1, 1))), dtype=float)[0]
        return float(raw) if self.dim is None else raw

    def __call__(self, t, w):
        w = np.asarray(w, dtype=float)
        values = np.asarray(self._values(t, w), dtype=float)
        n_paths = w.shape[0]
        shape = (n_paths,) if self.dim is None else (n_paths, self.dim)
        values = np.broadcast_to(values, shape)
        if engine_setting('CHECK_BOUNDS') and np.any(np.abs(values) > self.bound * (1 + 1e-12) + 1e-15):
            raise RangeError('Coefficient exceeds its declared bound', bound=self.bound,
                             observed=float(np.abs(values).max()), t=t)
        return values

    def to_dict(self):
        raise NotImplementedError


class ConstantCoefficient(Coefficient):
    def __init__(self, value, bound=None):
        value = np.asarray(value, dtype=float)
        dim = None if value.ndim == 0 else value.shape[0]
        magnitude = float(np.max(np.abs(value))) if value.size else 0.0
        super().__init__(magnitude if bound is None else bound, dim)
        if magnitude > self.bound:
            raise DomainError('Constant exceeds its declared bound', value=magnitude, bound=self.bound)
        self.value = value

    def _values(self, t, w):
        if self.dim is None:
            return np.full(w.shape[0], float(self.value))
        return np.tile(self.value, (w.shape[0], 1))

    def value_at(self, t):
        return float(self.value) if self.dim is None else self.value.copy()

    def to_dict(self):
        return {'kind': 'constant', 'value': self.value.tolist(), 'bound': self.bound}


class TableCoefficient(Coefficient):
    """Deterministic table of values at increasing times, linear in between"""

    def __init__(self, times, values, bound=None):
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if times.ndim != 1 or times.size < 2 or not np.all(np.diff(times) > 0):
            raise DomainError('Table times must be strictly increasing with at least two entries')
        if values.shape[0] != times.size:
            raise DomainError('Table values must have one row per time', rows=values.shape[0], times=times.size)
        dim = None if values.ndim == 1 else values.shape[1]
        magnitude = float(np.max(np.abs(values)))
        super().__init__(magnitude if bound is None else bound, dim)
        if magnitude > self.bound:
            raise DomainError('Table exceeds its declared bound', value=magnitude, bound=self.bound)
        self.times = times
        self.values = values

    def _interpolate(self, t):
        if self.dim is None:
            return np.interp(t, self.times, self.values)
        return np.array([np.interp(t, self.times, self.values[:, i]) for i in range(self.dim)])

    def _values(self, t, w):
        value = self._interpolate(t)
        if self.dim is None:
            return np.full(w.shape[0], float(value))
        return np.tile(value, (w.shape[0], 1))

    def value_at(self, t):
        value = self._interpolate(t)
        return float(value) if self.dim is None else value

    def covers(self, horizon):
        return self.times[0] <= 0 and self.times[-1] >= horizon

    def to_dict(self):
        return {'kind': 'table', 'times': self.times.tolist(), 'values': self.values.tolist(), 'bound': self.bound}


class StateCoefficient(Coefficient):
    """
    base + amplitude * tanh(loading . W_t + rate * t)

    Bounded by |base| + |amplitude| componentwise. A Python callable
    f(t, w) -> values may be given instead together with an explicit bound.
    """
    is_deterministic = False

    def __init__(self, base=0.0, amplitude=0.0, loading=None, rate=0.0, bound=None, function=None, dim=None):
        if function is not None:
            if bound is None:
                raise DomainError('A callable coefficient needs a declared bound')
            super().__init__(bound, dim)
            self.function = function
            self.base = self.amplitude = self.loading = None
            self.rate = 0.0
            return
        base = np.asarray(base, dtype=float)
        amplitude = np.asarray(amplitude, dtype=float)
        dim = None if base.ndim == 0 and amplitude.ndim == 0 else int(np.broadcast(base, amplitude).shape[0])
        natural = float(np.max(np.abs(base) + np.abs(amplitude)))
        super().__init__(natural if bound is None else bound, dim)
        if natural > self.bound * (1 + 1e-12):
            raise DomainError('State coefficient can exceed its declared bound', natural=natural, bound=self.bound)
        self.function = None
        self.base = base
        self.amplitude = amplitude
        self.loading = np.atleast_1d(np.asarray(loading if loading is not None else [1.0], dtype=float))
        self.rate = float(rate)

    def _values(self, t, w):
        if self.function is not None:
            return self.function(t, w)
        width = min(self.loading.size, w.shape[1])
        signal = np.tanh(w[:, :width] @ self.loading[:width] + self.rate * t)
        if self.dim is None:
            return self.base + self.amplitude * signal
        return self.base[None, ...] + self.amplitude[None, ...] * signal[:, None]

    def to_dict(self):
        if self.function is not None:
            return {'kind': 'callable', 'bound': self.bound}
        return {
            'kind': 'state', 'base': self.base.tolist(), 'amplitude': self.amplitude.tolist(),
            'loading': self.loading.tolist(), 'rate': self.rate, 'bound': self.bound,
        }


@dataclass(frozen=True)
class MarketModel:
    """
    Interest rate r, market price of risk theta (first d1 coordinates
    hedgeable), income rate e and terminal payment E.
    """
    horizon: float
    d: int
    d1: int
    r: Coefficient
    theta: Coefficient
    income: Coefficient
    terminal: Coefficient

    def __post_init__(self):
        if not self.horizon > 0:
            raise DomainError('Horizon must be positive', horizon=self.horizon)
        if not 1 <= self.d1 <= self.d:
            raise DomainError('Hedgeable count must satisfy 1 <= d1 <= d', d=self.d, d1=self.d1)
        if self.r.dim is not None or self.income.dim is not None or self.terminal.dim is not None:
            raise DomainError('r, e and E must be scalar coefficients')
        if self.theta.dim not in (None, self.d):
            raise DomainError('theta must have d components', d=self.d, dim=self.theta.dim)

    @property
    def is_deterministic(self):
        return all(c.is_deterministic for c in (self.r, self.theta, self.income, self.terminal))

    @property
    def has_constant_rate(self):
        return isinstance(self.r, ConstantCoefficient)

    @property
    def r_bound(self):
        return self.r.bound

    @property
    def theta_bound(self):
        return self.theta.bound

    def rate(self, t, w):
        return self.r(t, w)

    def market_price(self, t, w):
        """theta as (n_paths, d)"""
        values = self.theta(t, w)
        if self.theta.dim is None:
            return np.repeat(values[:, None], self.d, axis=1)
        return values

    def hedgeable_price(self, t, w):
        """theta^H as (n_paths, d1)"""
        return self.market_price(t, w)[:, :self.d1]

    def income_rate(self, t, w):
        return self.income(t, w)

    def terminal_payment(self, w):
        return self.terminal(self.horizon, w)

    def hedgeable_price_at(self, t):
        """Deterministic theta^H at t as a (d1,) array"""
        value = np.asarray(self.theta.value_at(t), dtype=float)
        if value.ndim == 0:
            value = np.full(self.d, float(value))
        return value[:self.d1]

    def to_dict(self):
        return {
            'T': self.horizon, 'd': self.d, 'd1': self.d1,
            'r': self.r.to_dict(), 'theta': self.theta.to_dict(),
            'e': self.income.to_dict(), 'E': self.terminal.to_dict(),
        }
