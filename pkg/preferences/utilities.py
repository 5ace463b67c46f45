"""
Utility functions of the class used by the engine: three times
differentiable, strictly increasing, strictly concave on the whole real line.

Two kinds are supported:

* ``ExponentialUtility``: U(x) = -exp(-gamma x), everything in closed form.
* ``FrommImkellerUtility``: U(x) = -int_x^inf int_y^inf exp(-kappa(z)) dz dy
  for a convex kappa with bounded, strictly positive slope. U and U' come
  from quadrature tables built once at construction; U'' = -exp(-kappa) and
  U''' = kappa' exp(-kappa) are exact.
"""

import logging
import math

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicHermiteSpline
from scipy.special import expit

from common.conf import engine_setting
from common.exceptions import DomainError, NumericError, RangeError

logger = logging.getLogger(__name__)


def _as_array(x):
    array = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(array)):
        raise DomainError('Utility argument must be finite')
    return array


def _unwrap(x, result):
    return float(result) if np.ndim(x) == 0 else result


class UtilityFunction:
    """Evaluable bundle (U, U', U'', U''', (U')^-1)"""
    kind = None
    # |U''| decreasing in x; m_bound then reduces to one evaluation
    curvature_decreasing = False

    def _derivative(self, x, order):
        raise NotImplementedError

    def evaluate(self, x, order=0):
        """
        Evaluate U or one of its first three derivatives.

        Args:
            x: real number or array of real numbers
            order (int): 0 for U, 1 for U', 2 for U'', 3 for U'''

        Returns:
            float for scalar input, ndarray otherwise
        """
        if order not in (0, 1, 2, 3):
            raise DomainError('Derivative order must be 0, 1, 2 or 3', order=order)
        array = _as_array(x)
        return _unwrap(x, self._derivative(array, order))

    def marginal(self, x):
        return self.evaluate(x, 1)

    def marginal_inverse(self, m):
        raise NotImplementedError

    def risk_tolerance(self, x):
        """U'/U'' at x, the quantity the investment condition is built from"""
        return self.evaluate(x, 1) / self.evaluate(x, 2)

    def m_bound(self, x, delta):
        """max |U''(x + y)| over |y| <= delta"""
        if np.any(np.asarray(delta) < 0):
            raise DomainError('delta must be nonnegative', delta=delta)
        scalar = np.ndim(x) == 0 and np.ndim(delta) == 0
        if self.curvature_decreasing:
            value = self.evaluate(np.asarray(x, dtype=float) - np.asarray(delta, dtype=float), 2)
            return abs(float(value)) if scalar else np.abs(value)
        x, delta = np.broadcast_arrays(np.atleast_1d(np.asarray(x, dtype=float)),
                                       np.atleast_1d(np.asarray(delta, dtype=float)))
        offsets = np.linspace(-1.0, 1.0, 1001)
        values = np.abs(self.evaluate(x[..., None] + delta[..., None] * offsets, 2)).max(axis=-1)
        return float(values.ravel()[0]) if scalar else values

    def to_dict(self):
        raise NotImplementedError


class ExponentialUtility(UtilityFunction):
    kind = 'exponential'
    curvature_decreasing = True

    def __init__(self, gamma):
        if not gamma > 0 or not math.isfinite(gamma):
            raise DomainError('Exponential utility needs gamma > 0', gamma=gamma)
        self.gamma = float(gamma)

    def _derivative(self, x, order):
        g = self.gamma
        base = np.exp(-g * x)
        if order == 0:
            return -base
        if order == 1:
            return g * base
        if order == 2:
            return -g * g * base
        return g ** 3 * base

    def marginal_inverse(self, m):
        array = np.asarray(m, dtype=float)
        if not np.all(array > 0):
            raise DomainError('Marginal utility level must be positive')
        return _unwrap(m, -np.log(array / self.gamma) / self.gamma)

    def to_dict(self):
        return {'kind': self.kind, 'gamma': self.gamma}


class KappaFunction:
    """Convex exponent of the Fromm-Imkeller density exp(-kappa)"""
    name = None

    def value(self, z):
        raise NotImplementedError

    def slope(self, z):
        raise NotImplementedError

    def curvature(self, z):
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError


class SoftplusKappa(KappaFunction):
    """
    kappa(z) = a0 + a1 z + a2 softplus(b z)

    The built-in ``softplus_shift`` is (0, 1, 1, 1), i.e. z + log(1 + e^z),
    with slope in (1, 2) and nonnegative curvature.
    """
    name = 'softplus'

    def __init__(self, a0=0.0, a1=1.0, a2=1.0, b=1.0):
        self.a0, self.a1, self.a2, self.b = float(a0), float(a1), float(a2), float(b)
        if self.a2 * self.b * self.b < 0:
            raise DomainError('kappa must be convex (a2 >= 0)', a2=a2)
        low, high = sorted((self.a1, self.a1 + self.a2 * self.b))
        if not low > 0:
            raise DomainError('kappa slope must stay strictly positive', inf_slope=low)
        self.slope_bounds = (low, high)

    @classmethod
    def softplus_shift(cls):
        kappa = cls(0.0, 1.0, 1.0, 1.0)
        kappa.name = 'softplus_shift'
        return kappa

    def value(self, z):
        return self.a0 + self.a1 * z + self.a2 * np.logaddexp(0.0, self.b * z)

    def slope(self, z):
        return self.a1 + self.a2 * self.b * expit(self.b * z)

    def curvature(self, z):
        sigma = expit(self.b * z)
        return self.a2 * self.b * self.b * sigma * (1.0 - sigma)

    def to_dict(self):
        if self.name == 'softplus_shift':
            return {'builtin': 'softplus_shift'}
        return {'coefficients': [self.a0, self.a1, self.a2, self.b]}


class FrommImkellerUtility(UtilityFunction):
    kind = 'fromm_imkeller'
    curvature_decreasing = True

    def __init__(self, kappa, x_min=-10.0, x_max=10.0, n_nodes=801, quad_tol=None,
                 inverse_tol=None):
        if not x_min < x_max:
            raise DomainError('Quadrature range must satisfy x_min < x_max', x_min=x_min, x_max=x_max)
        if n_nodes < 3:
            raise DomainError('Quadrature table needs at least 3 nodes', n_nodes=n_nodes)
        self.kappa = kappa
        self.x_min = float(x_min)
        self.x_max = float(x_max)
        self.n_nodes = int(n_nodes)
        self.quad_tol = quad_tol if quad_tol is not None else engine_setting('QUAD_TOL')
        self.inverse_tol = inverse_tol if inverse_tol is not None else engine_setting('INVERSE_TOL')
        self._check_kappa()
        self._build_tables()

    def _check_kappa(self):
        probe = np.linspace(self.x_min, self.x_max, 2001)
        slopes = self.kappa.slope(probe)
        curvatures = self.kappa.curvature(probe)
        if not np.all(slopes > 0) or not np.all(np.isfinite(slopes)):
            raise DomainError('kappa slope must be strictly positive and finite on the range')
        if np.any(curvatures < 0):
            raise DomainError('kappa must be convex on the range')

    def _density(self, z):
        return np.exp(-self.kappa.value(z))

    def _build_tables(self):
        tol = self.quad_tol
        nodes = np.linspace(self.x_min, self.x_max, self.n_nodes)

        def quad(func, lo, hi):
            value, _ = integrate.quad(func, lo, hi, epsabs=tol, epsrel=tol, limit=200)
            return value

        # U'(x) = int_x^inf e^{-kappa}, accumulated right to left over table cells
        marginal = np.empty(self.n_nodes)
        marginal[-1] = quad(self._density, nodes[-1], np.inf)
        for j in range(self.n_nodes - 2, -1, -1):
            marginal[j] = marginal[j + 1] + quad(self._density, nodes[j], nodes[j + 1])

        # U(x) = -int_x^inf U'(y) dy, outer integral over the inner one
        def tail_marginal(y, anchor, anchor_value):
            return anchor_value + quad(self._density, y, anchor)

        level = np.empty(self.n_nodes)
        level[-1] = -quad(lambda y: quad(self._density, y, np.inf), nodes[-1], np.inf)
        for j in range(self.n_nodes - 2, -1, -1):
            cell = quad(lambda y: tail_marginal(y, nodes[j + 1], marginal[j + 1]), nodes[j], nodes[j + 1])
            level[j] = level[j + 1] - cell

        curvature = -self._density(nodes)
        self._nodes = nodes
        self._marginal_table = marginal
        self._marginal_spline = CubicHermiteSpline(nodes, marginal, curvature)
        self._level_spline = CubicHermiteSpline(nodes, level, marginal)
        logger.debug(f'Built Fromm-Imkeller tables on [{self.x_min}, {self.x_max}] with {self.n_nodes} nodes')

    def _check_range(self, x):
        if np.any(x < self.x_min) or np.any(x > self.x_max):
            raise RangeError(
                'Argument outside the tabulated utility range',
                x_min=self.x_min, x_max=self.x_max,
                lowest=float(np.min(x)), highest=float(np.max(x)),
            )

    def _derivative(self, x, order):
        self._check_range(x)
        if order == 0:
            return self._level_spline(x)
        if order == 1:
            return self._marginal_spline(x)
        density = self._density(x)
        if order == 2:
            return -density
        return self.kappa.slope(x) * density

    def marginal_inverse(self, m):
        """
        Solve U'(x) = m by a bracket expanded geometrically around 0 and
        refined with safeguarded Newton steps (bisection when Newton leaves
        the bracket).
        """
        target = np.atleast_1d(np.asarray(m, dtype=float))
        if not np.all(target > 0):
            raise DomainError('Marginal utility level must be positive')
        top, bottom = self._marginal_table[0], self._marginal_table[-1]
        if np.any(target > top) or np.any(target < bottom):
            raise RangeError(
                'Marginal level outside the tabulated range',
                lowest=float(target.min()), highest=float(target.max()),
                table_low=float(bottom), table_high=float(top),
            )

        center = min(max(0.0, self.x_min), self.x_max)
        width = np.ones_like(target)
        lo = np.full_like(target, self.x_min)
        hi = np.full_like(target, self.x_max)
        for _ in range(64):
            left = np.maximum(center - width, self.x_min)
            right = np.minimum(center + width, self.x_max)
            inside = (self._marginal_spline(left) >= target) & (self._marginal_spline(right) <= target)
            lo = np.where(inside, left, lo)
            hi = np.where(inside, right, hi)
            if np.all(inside):
                break
            width = np.where(inside, width, width * 2.0)

        x = 0.5 * (lo + hi)
        converged = np.zeros(target.shape, dtype=bool)
        for _ in range(200):
            gap = self._marginal_spline(x) - target
            lo = np.where(gap > 0, x, lo)
            hi = np.where(gap > 0, hi, x)
            newton = x - gap / (-self._density(x))
            outside = (newton <= lo) | (newton >= hi) | ~np.isfinite(newton)
            x_next = np.where(outside, 0.5 * (lo + hi), newton)
            converged = (np.abs(x_next - x) <= self.inverse_tol * 1e-2) | (hi - lo <= self.inverse_tol * 1e-2)
            x = x_next
            if np.all(converged):
                break
        if not np.all(converged):
            worst = int(np.argmax(~converged))
            raise NumericError(
                'Marginal inverse did not converge',
                level=float(target[worst]), bracket=(float(lo[worst]), float(hi[worst])),
            )
        return float(x[0]) if np.ndim(m) == 0 else x

    def to_dict(self):
        return {
            'kind': self.kind,
            'kappa': self.kappa.to_dict(),
            'range': [self.x_min, self.x_max],
            'nodes': self.n_nodes,
        }
