"""
Open-loop overlays added to a reference pair.

An overlay shifts the reference controls by (a, b): consumption c + a and
investment pi + b, where the reference controls are always read off the
unperturbed wealth path. Perturbed wealth then equals reference wealth plus
the solution xi of

    d xi = (r xi + b . theta - a) ds + b . dW,   xi = 0 before the overlay starts.
"""

import logging
import math

import numpy as np

from common.exceptions import DomainError

logger = logging.getLogger(__name__)

WINDOW_TOL = 1e-12


class StateKappa:
    """F_t-measurable consumption shift amplitude * tanh(loading . W_t)"""

    def __init__(self, amplitude, loading):
        self.amplitude = float(amplitude)
        self.loading = np.atleast_1d(np.asarray(loading, dtype=float))

    @property
    def bound(self):
        return abs(self.amplitude)

    def __call__(self, w):
        width = min(self.loading.size, w.shape[1])
        return self.amplitude * np.tanh(w[:, :width] @ self.loading[:width])

    def __neg__(self):
        return StateKappa(-self.amplitude, self.loading)

    def to_dict(self):
        return {'amplitude': self.amplitude, 'loading': self.loading.tolist()}


class Overlay:
    start = 0.0

    def active(self, t):
        raise NotImplementedError

    def shift(self, t, anchor_w, n_paths, d):
        """(a, b) of shapes (n_paths,) and (n_paths, d)"""
        raise NotImplementedError

    def breakpoints(self):
        return []


class PerturbationSpec(Overlay):
    """
    Spike of size (kappa, eta) on [t, t + epsilon). kappa is a constant or a
    StateKappa read at W_t; eta vanishes beyond the hedgeable coordinates.
    """

    def __init__(self, t, kappa, eta, epsilon, d, d1, horizon, bound=None):
        eta = np.zeros(d) if eta is None else np.asarray(eta, dtype=float)
        if eta.shape != (d,):
            raise DomainError('eta must have d components', d=d, shape=eta.shape)
        if np.any(eta[d1:] != 0):
            raise DomainError('eta must vanish beyond the hedgeable coordinates', d1=d1)
        if not 0 <= t < horizon:
            raise DomainError('Perturbation time must lie in [0, T)', t=t, horizon=horizon)
        if not epsilon > 0:
            raise DomainError('Window length must be positive', epsilon=epsilon)
        if t + epsilon > horizon + WINDOW_TOL:
            raise DomainError('Window ends after the horizon', t=t, epsilon=epsilon, horizon=horizon)
        kappa_bound = kappa.bound if isinstance(kappa, StateKappa) else abs(float(kappa))
        if bound is not None and (kappa_bound > bound or np.max(np.abs(eta)) > bound):
            raise DomainError('Perturbation exceeds its declared bound', bound=bound)
        self.start = float(t)
        self.kappa = kappa if isinstance(kappa, StateKappa) else float(kappa)
        self.eta = eta
        self.epsilon = float(epsilon)
        self.d1 = d1
        self.horizon = float(horizon)

    @property
    def end(self):
        return self.start + self.epsilon

    @property
    def is_zero(self):
        constant_zero = not isinstance(self.kappa, StateKappa) and self.kappa == 0.0
        return constant_zero and not np.any(self.eta)

    def active(self, t):
        return self.start - WINDOW_TOL <= t < self.end - WINDOW_TOL

    def kappa_values(self, anchor_w, n_paths):
        if isinstance(self.kappa, StateKappa):
            return self.kappa(anchor_w)
        return np.full(n_paths, self.kappa)

    def shift(self, t, anchor_w, n_paths, d):
        if not self.active(t):
            return np.zeros(n_paths), np.zeros((n_paths, d))
        return self.kappa_values(anchor_w, n_paths), np.tile(self.eta, (n_paths, 1))

    def breakpoints(self):
        return [self.start, self.end]

    def with_epsilon(self, epsilon):
        return PerturbationSpec(self.start, self.kappa, self.eta, epsilon, self.eta.size, self.d1, self.horizon)

    def negated(self):
        return PerturbationSpec(self.start, -self.kappa, -self.eta, self.epsilon, self.eta.size, self.d1, self.horizon)

    def to_dict(self):
        kappa = self.kappa.to_dict() if isinstance(self.kappa, StateKappa) else self.kappa
        return {'t': self.start, 'kappa': kappa, 'eta': self.eta.tolist(), 'epsilon': self.epsilon}


class SmoothProfile(Overlay):
    """
    Whole-horizon shift a(s) = sum_j a_j sin(j pi s / T), b(s) likewise per
    hedgeable coordinate; bounded by the sum of absolute coefficients.
    """

    def __init__(self, consumption_coefficients, investment_coefficients, d, d1, horizon):
        self.a = np.asarray(consumption_coefficients, dtype=float)
        self.b = np.asarray(investment_coefficients, dtype=float).reshape(len(self.a), d1)
        self.d = d
        self.d1 = d1
        self.horizon = float(horizon)

    @classmethod
    def draw(cls, generator, n_modes, scale, d, d1, horizon):
        consumption = generator.uniform(-scale, scale, n_modes) / np.arange(1, n_modes + 1)
        investment = generator.uniform(-scale, scale, (n_modes, d1)) / np.arange(1, n_modes + 1)[:, None]
        return cls(consumption, investment, d, d1, horizon)

    @property
    def bound(self):
        return float(max(np.abs(self.a).sum(), np.abs(self.b).sum(axis=0).max()))

    def _basis(self, t):
        modes = np.arange(1, len(self.a) + 1)
        return np.sin(modes * math.pi * t / self.horizon)

    def active(self, t):
        return True

    def shift(self, t, anchor_w, n_paths, d):
        basis = self._basis(t)
        a = float(basis @ self.a)
        b = np.zeros(d)
        b[:self.d1] = basis @ self.b
        return np.full(n_paths, a), np.tile(b, (n_paths, 1))

    def to_dict(self):
        return {'consumption': self.a.tolist(), 'investment': self.b.tolist()}
