"""
Consumption-investment pairs.

A pair maps (t, wealth, W_t) to a consumption rate of shape (n_paths,) and
an investment vector of shape (n_paths, d) whose coordinates beyond d1 are
exactly zero.
"""

import logging

import numpy as np

from common.exceptions import DomainError, StateError

logger = logging.getLogger(__name__)


class StrategyPair:
    kind = None
    # stored pairs can only be replayed on the paths they were computed on
    feedback = True

    def __init__(self, d, d1):
        if not 1 <= d1 <= d:
            raise DomainError('Hedgeable count must satisfy 1 <= d1 <= d', d=d, d1=d1)
        self.d = d
        self.d1 = d1

    def _consumption(self, t, wealth, w, step):
        raise NotImplementedError

    def _investment(self, t, wealth, w, step):
        """Hedgeable part, shape (n_paths, d1)"""
        raise NotImplementedError

    def controls(self, t, wealth, w, step=None):
        wealth = np.asarray(wealth, dtype=float)
        n_paths = wealth.shape[0]
        consumption = np.broadcast_to(np.asarray(self._consumption(t, wealth, w, step), dtype=float), (n_paths,))
        investment = np.zeros((n_paths, self.d))
        investment[:, :self.d1] = self._investment(t, wealth, w, step)
        return consumption, investment

    def to_dict(self):
        return {'kind': self.kind, 'd': self.d, 'd1': self.d1}


class ConstantStrategy(StrategyPair):
    kind = 'constant'

    def __init__(self, consumption, investment, d, d1):
        super().__init__(d, d1)
        investment = np.atleast_1d(np.asarray(investment, dtype=float))
        if investment.size != d1:
            raise DomainError('Investment needs one entry per hedgeable coordinate', size=investment.size, d1=d1)
        self.consumption = float(consumption)
        self.investment = investment

    def _consumption(self, t, wealth, w, step):
        return self.consumption

    def _investment(self, t, wealth, w, step):
        return np.broadcast_to(self.investment, (wealth.shape[0], self.d1))

    def to_dict(self):
        return {**super().to_dict(), 'c': self.consumption, 'pi': self.investment.tolist()}


class ScheduleStrategy(StrategyPair):
    """Deterministic consumption and investment schedules c(t), pi^H(t)"""
    kind = 'schedule'

    def __init__(self, consumption, investment, d, d1, label='schedule'):
        super().__init__(d, d1)
        self.consumption = consumption
        self.investment = investment
        self.label = label

    def _consumption(self, t, wealth, w, step):
        return float(self.consumption(t))

    def _investment(self, t, wealth, w, step):
        value = np.atleast_1d(np.asarray(self.investment(t), dtype=float))
        return np.broadcast_to(value[:self.d1], (wealth.shape[0], self.d1))

    def to_dict(self):
        return {**super().to_dict(), 'label': self.label}


class EquilibriumStrategy(StrategyPair):
    """
    Exponential-utility equilibrium in feedback form:

        c*  = (g2/g1)(h X + Yt) - (1/g1) log((g2/g1) lambda2(t, T))
        pi* = (theta^H / g2 - Zt^H) / h

    with (Yt, Zt) the transformed backward solution evaluated at (t, W_t).
    """
    kind = 'equilibrium'

    def __init__(self, solution, market, gamma1, gamma2, lambda2):
        super().__init__(market.d, market.d1)
        self.solution = solution
        self.market = market
        self.gamma1 = float(gamma1)
        self.gamma2 = float(gamma2)
        self.lambda2 = lambda2

    def _log_term(self, t):
        weight = self.lambda2.to_terminal(t)
        if not weight > 0:
            raise DomainError('lambda2(s, T) must be positive', s=t, value=weight)
        return np.log(self.gamma2 / self.gamma1 * weight) / self.gamma1

    def _consumption(self, t, wealth, w, step):
        h = self.solution.schedule.at(t)
        ytilde = self.solution.ytilde_at(t, w)
        return self.gamma2 / self.gamma1 * (h * wealth + ytilde) - self._log_term(t)

    def _investment(self, t, wealth, w, step):
        h = self.solution.schedule.at(t)
        ztilde = self.solution.ztilde_at(t, w)
        theta_h = self.market.hedgeable_price(t, w)
        return (theta_h / self.gamma2 - ztilde[:, :self.d1]) / h

    def to_dict(self):
        return {**super().to_dict(), 'gamma1': self.gamma1, 'gamma2': self.gamma2,
                'provenance': self.solution.provenance}


class StoredStrategy(StrategyPair):
    """Per-path processes on a fixed grid, replayable only on the same paths"""
    kind = 'stored'
    feedback = False

    def __init__(self, grid, consumption, investment, d, d1):
        super().__init__(d, d1)
        consumption = np.asarray(consumption, dtype=float)
        investment = np.asarray(investment, dtype=float)
        if consumption.ndim != 2 or investment.shape[:2] != consumption.shape:
            raise DomainError('Stored strategy needs (n_paths, n_steps) consumption and matching investment')
        if np.any(investment[..., d1:] != 0):
            raise DomainError('Stored investment must vanish beyond the hedgeable coordinates')
        self.grid = np.asarray(grid, dtype=float)
        self.consumption = consumption
        self.investment = investment

    def _row_check(self, wealth, step):
        if step is None or wealth.shape[0] != self.consumption.shape[0]:
            raise StateError('Stored strategy can only be replayed on its own paths and grid')

    def _consumption(self, t, wealth, w, step):
        self._row_check(wealth, step)
        return self.consumption[:, step]

    def _investment(self, t, wealth, w, step):
        self._row_check(wealth, step)
        return self.investment[:, step, :self.d1]
