import numpy as np

from equilibrium.extraction import extract_equilibrium
from fbsde.services import FbsdeService
from market.strategies import StrategyPair
from market.tests.helpers import benchmark_discount, benchmark_market, ensemble
from preferences.utilities import ExponentialUtility


def benchmark_solution(n_paths=400, n_steps=40, seed=7, discount=None):
    """Solved benchmark (gamma1 = gamma2 = 2, x = 1) with its equilibrium pair"""
    market = benchmark_market()
    discount = discount or benchmark_discount()
    u = ExponentialUtility(2.0)
    solution = FbsdeService.solve(market, discount, 2.0, 2.0, 1.0, ensemble(n_paths, n_steps, seed=seed))
    pair = extract_equilibrium(solution, u, u, discount, market)
    return market, discount, u, solution, pair


class ShiftedPair(StrategyPair):
    """Feedback pair with consumption moved by ``shift`` and, optionally, investment dropped"""
    kind = 'shifted'

    def __init__(self, pair, shift=0.0, drop_investment=False):
        super().__init__(pair.d, pair.d1)
        self.pair = pair
        self.shift = shift
        self.drop_investment = drop_investment

    def _consumption(self, t, wealth, w, step):
        return self.pair.controls(t, wealth, w, step=step)[0] + self.shift

    def _investment(self, t, wealth, w, step):
        investment = self.pair.controls(t, wealth, w, step=step)[1][:, :self.d1]
        return np.zeros_like(investment) if self.drop_investment else investment
