"""
Tests for the backward ODE and LSMC solvers of the transformed BSDE.
"""

import numpy as np
from django.test import SimpleTestCase

from common.exceptions import DomainError, GridError, NumericError
from common.numerics import uniform_grid
from common.reports import Estimate
from fbsde.solution import DETERMINISTIC, LSMC
from fbsde.solvers import solve_tilde_bsde_deterministic, solve_tilde_bsde_lsmc
from market.coefficients import ConstantCoefficient, MarketModel, StateCoefficient, TableCoefficient
from market.tests.helpers import benchmark_discount, benchmark_market, constant_market, ensemble
from preferences.discounting import ExponentialDiscount


class VanishingDiscount:
    horizon = 1.0

    def to_terminal(self, s):
        return np.zeros_like(np.asarray(s, dtype=float))


def random_terminal_market(d=1, d1=1, loading=None):
    return MarketModel(
        horizon=1.0, d=d, d1=d1,
        r=ConstantCoefficient(0.0), theta=ConstantCoefficient(np.zeros(d)), income=ConstantCoefficient(0.0),
        terminal=StateCoefficient(base=0.5, amplitude=0.3, loading=loading or [1.0]),
    )


class DeterministicSolverTestCase(SimpleTestCase):
    flat = ExponentialDiscount(1.0, 0.0)

    def test_terminal_only_case_is_scaled_by_h(self):
        grid = uniform_grid(0.0, 1.0, 200)
        solution = solve_tilde_bsde_deterministic(constant_market(E=0.1), self.flat, 1.0, 1.0, grid)
        self.assertEqual(solution.provenance, DETERMINISTIC)
        self.assertAlmostEqual(solution.ytilde[0], 0.05, places=10)
        self.assertLessEqual(np.max(np.abs(solution.ytilde - 0.1 * solution.schedule.values)), 1e-8)
        self.assertTrue(np.all(solution.ztilde == 0.0))

    def test_zero_data(self):
        solution = solve_tilde_bsde_deterministic(constant_market(), self.flat, 1.5, 1.5, uniform_grid(0.0, 1.0, 50))
        self.assertTrue(np.all(solution.ytilde == 0.0))

    def test_benchmark_converges_in_ode_step(self):
        grid = uniform_grid(0.0, 1.0, 10)
        coarse = solve_tilde_bsde_deterministic(benchmark_market(), benchmark_discount(), 2.0, 2.0, grid)
        fine = solve_tilde_bsde_deterministic(benchmark_market(), benchmark_discount(), 2.0, 2.0, grid,
                                              ode_step=1e-5)
        self.assertLessEqual(abs(coarse.ytilde[0] - fine.ytilde[0]), 1e-8)
        self.assertEqual(coarse.ytilde[-1], 0.1)

    def test_time_dependent_table(self):
        market = MarketModel(
            horizon=1.0, d=1, d1=1, r=ConstantCoefficient(0.02),
            theta=TableCoefficient([0.0, 1.0], [[0.2], [0.4]]), income=TableCoefficient([0.0, 1.0], [0.0, 0.1]),
            terminal=ConstantCoefficient(0.1),
        )
        solution = solve_tilde_bsde_deterministic(market, benchmark_discount(), 1.0, 2.0, uniform_grid(0.0, 1.0, 20))
        self.assertTrue(np.all(np.isfinite(solution.ytilde)))

    def test_nonpositive_lambda_rejected(self):
        with self.assertRaises(DomainError):
            solve_tilde_bsde_deterministic(benchmark_market(), VanishingDiscount(), 2.0, 2.0, uniform_grid(0.0, 1.0, 10))

    def test_random_coefficients_rejected(self):
        with self.assertRaises(DomainError):
            solve_tilde_bsde_deterministic(random_terminal_market(), self.flat, 1.0, 1.0, uniform_grid(0.0, 1.0, 10))

    def test_grid_must_cover_horizon(self):
        with self.assertRaises(GridError):
            solve_tilde_bsde_deterministic(benchmark_market(), self.flat, 1.0, 1.0, uniform_grid(0.0, 0.5, 10))


class LsmcSolverTestCase(SimpleTestCase):
    flat = ExponentialDiscount(1.0, 0.0)

    def test_agrees_with_ode_on_deterministic_data(self):
        noise = ensemble(100000, 50)
        lsmc = solve_tilde_bsde_lsmc(benchmark_market(), benchmark_discount(), 2.0, 2.0, noise, degree=3)
        ode = solve_tilde_bsde_deterministic(benchmark_market(), benchmark_discount(), 2.0, 2.0, noise.grid)
        self.assertEqual(lsmc.provenance, LSMC)
        self.assertLessEqual(abs(lsmc.ytilde[0, 0] - ode.ytilde[0]), 1e-2)
        self.assertEqual(lsmc.diagnostics['truncation_hit_rate'], 0.0)

    def test_zero_data(self):
        solution = solve_tilde_bsde_lsmc(constant_market(), self.flat, 1.0, 1.0, ensemble(5000, 20))
        self.assertLessEqual(np.max(np.abs(solution.ytilde)), 1e-3)
        self.assertLessEqual(np.max(np.abs(solution.ztilde)), 1e-3)

    def test_vanishing_driver_gives_plain_expectation(self):
        noise = ensemble(10000, 20)
        market = random_terminal_market()
        solution = solve_tilde_bsde_lsmc(market, self.flat, 1e6, 1.0, noise)
        payoff = Estimate.from_samples(market.terminal_payment(noise.W[:, -1, :]))
        self.assertTrue(payoff.within(solution.ytilde[0, 0], 3.0))
        self.assertTrue(np.array_equal(solution.ytilde[:, -1], market.terminal_payment(noise.W[:, -1, :])))

    def test_stored_coefficients_reproduce_paths(self):
        noise = ensemble(3000, 10)
        solution = solve_tilde_bsde_lsmc(random_terminal_market(), self.flat, 1.0, 1.0, noise)
        for k in (0, 4, 9):
            t = noise.grid[k]
            self.assertTrue(np.allclose(solution.ytilde_at(t, noise.W[:, k, :]), solution.ytilde[:, k], atol=1e-12))
            self.assertTrue(np.allclose(solution.ztilde_at(t, noise.W[:, k, :]), solution.ztilde[:, k, :], atol=1e-12))

    def test_ill_conditioning_names_step(self):
        with self.assertRaises(NumericError) as caught:
            solve_tilde_bsde_lsmc(random_terminal_market(), self.flat, 1.0, 1.0, ensemble(500, 5), condition_limit=1.0)
        self.assertIn('step', caught.exception.context)

    def test_truncation_escalates_in_strict_mode(self):
        market = random_terminal_market(d=2, d1=1, loading=[0.0, 3.0])
        noise = ensemble(2000, 10, d=2)
        relaxed = solve_tilde_bsde_lsmc(market, self.flat, 1.0, 1.0, noise, z_max=1e-6)
        self.assertGreater(relaxed.diagnostics['truncation_hit_rate'], 0.01)
        with self.assertRaises(NumericError):
            solve_tilde_bsde_lsmc(market, self.flat, 1.0, 1.0, noise, z_max=1e-6, strict=True)
