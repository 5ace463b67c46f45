from django.test import SimpleTestCase

from fbsde.residuals import fbsde_residual_check
from fbsde.services import FbsdeService
from market.tests.helpers import benchmark_discount, benchmark_market, constant_market, ensemble
from preferences.discounting import ExponentialDiscount
from preferences.utilities import ExponentialUtility


def check(solution, market, discount, u, shift=0.0):
    return fbsde_residual_check(solution.X, solution.Y + shift, solution.Z, market, discount, u, u,
                                solution.grid, solution.ensemble)


class ResidualCheckTestCase(SimpleTestCase):
    def test_zero_data_residuals_vanish(self):
        market, discount, u = constant_market(), ExponentialDiscount(1.0, 0.0), ExponentialUtility(1.0)
        solution = FbsdeService.solve(market, discount, 1.0, 1.0, 1.0, ensemble(200, 50))
        report = check(solution, market, discount, u)
        self.assertTrue(report.passed)
        for key in ('forward_drift_max', 'backward_drift_max', 'forward_covariation_gap',
                    'backward_covariation_gap', 'terminal_mismatch'):
            self.assertLessEqual(report.constants[key], 1e-10, key)

    def test_benchmark_drift_residual_is_first_order(self):
        market, discount, u = benchmark_market(), benchmark_discount(), ExponentialUtility(2.0)
        maxima = []
        for n_steps in (50, 100):
            solution = FbsdeService.solve(market, discount, 2.0, 2.0, 1.0, ensemble(50000, n_steps))
            report = check(solution, market, discount, u)
            self.assertFalse(report.violated('terminal'))
            maxima.append((report.constants['forward_drift_max'], report.constants['backward_drift_max']))
        for coarse, fine in zip(*maxima):
            self.assertGreaterEqual(coarse / fine, 1.5)
            self.assertLessEqual(coarse / fine, 2.6)

    def test_shifted_adjoint_flags_terminal_mismatch(self):
        market, discount, u = benchmark_market(), benchmark_discount(), ExponentialUtility(2.0)
        solution = FbsdeService.solve(market, discount, 2.0, 2.0, 1.0, ensemble(100, 20))
        report = check(solution, market, discount, u, shift=0.1)
        self.assertFalse(report.passed)
        self.assertTrue(report.violated('terminal'))
