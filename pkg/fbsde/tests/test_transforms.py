"""
Tests for the forward simulation, the (un)transform and the solution export.
"""

import tempfile
from pathlib import Path

import numpy as np
import pandas as pd
from django.test import SimpleTestCase

from common.exceptions import DomainError, GridError, StateError
from common.reports import Estimate
from fbsde.export import COLUMNS, write_solution, write_solution_paths
from fbsde.services import FbsdeService
from fbsde.solution import FbsdeSolution
from fbsde.solvers import solve_tilde_bsde_deterministic
from fbsde.transforms import forward_transform, propagate_tilde_mean, simulate_forward_tilde, untransform
from market.simulation import simulate_wealth
from market.strategies import EquilibriumStrategy
from market.tests.helpers import benchmark_discount, benchmark_market, constant_market, ensemble
from preferences.discounting import ExponentialDiscount
from preferences.utilities import ExponentialUtility


def benchmark_solution(noise):
    return FbsdeService.solve(benchmark_market(), benchmark_discount(), 2.0, 2.0, 1.0, noise)


class ForwardSimulationTestCase(SimpleTestCase):
    def test_zero_data_keeps_transformed_wealth_constant(self):
        noise = ensemble(50, 40)
        solution = FbsdeService.solve(constant_market(), ExponentialDiscount(1.0, 0.0), 1.0, 1.0, 2.0, noise)
        self.assertTrue(np.all(solution.xtilde == solution.schedule.values[0] * 2.0))

    def test_mean_matches_propagated_mean(self):
        noise = ensemble(10000, 200)
        solution = benchmark_solution(noise)
        mean = propagate_tilde_mean(benchmark_market(), solution, 1.0)
        self.assertTrue(Estimate.from_samples(solution.xtilde[:, -1]).within(mean[-1], 3.0))

    def test_affine_in_initial_wealth(self):
        noise = ensemble(200, 50)
        market, discount = benchmark_market(), benchmark_discount()
        backward = solve_tilde_bsde_deterministic(market, discount, 2.0, 2.0, noise.grid)
        poor = simulate_forward_tilde(market, backward, 0.0, noise)
        rich = simulate_forward_tilde(market, backward, 1.0, noise)
        self.assertLessEqual(np.max(np.abs(rich.xtilde - poor.xtilde - backward.schedule.values[0])), 1e-12)

    def test_equilibrium_wealth_matches_propagated_mean(self):
        noise = ensemble(10000, 200)
        solution = benchmark_solution(noise)
        strategy = EquilibriumStrategy(solution, benchmark_market(), 2.0, 2.0, benchmark_discount())
        wealth = simulate_wealth(benchmark_market(), strategy, noise, 1.0)
        mean = propagate_tilde_mean(benchmark_market(), solution, 1.0)
        self.assertTrue(Estimate.from_samples(wealth.terminal).within(mean[-1] / solution.schedule.values[-1], 3.0))

    def test_missing_backward_solution(self):
        noise = ensemble(20, 10)
        backward = solve_tilde_bsde_deterministic(benchmark_market(), benchmark_discount(), 2.0, 2.0, noise.grid)
        with self.assertRaises(StateError):
            simulate_forward_tilde(benchmark_market(), backward.with_paths(ytilde=None), 1.0, noise)

    def test_grid_mismatch(self):
        backward = solve_tilde_bsde_deterministic(benchmark_market(), benchmark_discount(), 2.0, 2.0,
                                                  ensemble(5, 10).grid)
        with self.assertRaises(GridError):
            simulate_forward_tilde(benchmark_market(), backward, 1.0, ensemble(5, 20))

    def test_p_moment_sweep_is_finite(self):
        solution = benchmark_solution(ensemble(2000, 50))
        rows = FbsdeService.p_moment_sweep(solution, ExponentialUtility(2.0))
        self.assertEqual([row['p'] for row in rows], [1.5, 2.0, 4.0])
        self.assertTrue(all(row['finite'] for row in rows))


class TransformTestCase(SimpleTestCase):
    def setUp(self):
        self.solution = benchmark_solution(ensemble(300, 50))
        self.h = self.solution.schedule.values

    def test_identity_at_horizon(self):
        solution = self.solution
        self.assertTrue(np.array_equal(solution.X[:, -1], solution.xtilde[:, -1]))
        self.assertTrue(np.all(solution.Y[:, -1] == 0.1))

    def test_round_trip(self):
        solution = self.solution
        xtilde, ytilde, ztilde = forward_transform(solution.X, solution.Y, solution.Z, self.h, solution.theta_h,
                                                   2.0, 1)
        self.assertLessEqual(np.max(np.abs(xtilde - solution.xtilde)), 1e-12)
        self.assertLessEqual(np.max(np.abs(ytilde - solution.ytilde)), 1e-12)
        self.assertLessEqual(np.max(np.abs(ztilde - solution.ztilde)), 1e-12)

    def test_hedgeable_z_of_benchmark(self):
        expected = (1.0 - 1.0 / self.h) * 0.3 / 2.0
        self.assertLessEqual(np.max(np.abs(self.solution.Z[:, 0] - expected)), 1e-15)

    def test_untransform_broadcasts_per_path_blocks(self):
        n_grid = self.h.size
        rng = np.random.default_rng(3)
        xtilde = rng.normal(size=(4, n_grid))
        ztilde = rng.normal(size=(4, n_grid, 2))
        theta_h = rng.normal(size=(4, n_grid, 1))
        X, Y, Z = untransform(xtilde, 0.1, ztilde, self.h, theta_h, 2.0, 1)
        self.assertEqual(Z.shape, (4, n_grid, 2))
        self.assertTrue(np.array_equal(Z[..., 1], ztilde[..., 1]))
        back = forward_transform(X, Y, Z, self.h, theta_h, 2.0, 1)
        self.assertLessEqual(np.max(np.abs(back[2] - ztilde)), 1e-12)


class ExportTestCase(SimpleTestCase):
    def test_solution_csv_and_sidecar(self):
        solution = benchmark_solution(ensemble(100, 20))
        with tempfile.TemporaryDirectory() as tmp:
            csv_path, json_path = write_solution(solution, Path(tmp))
            frame = pd.read_csv(csv_path)
            sidecar = json_path.read_text()
        self.assertEqual(list(frame.columns), COLUMNS)
        self.assertEqual(len(frame), 21)
        self.assertEqual(frame['Ztilde_O_mean'].abs().max(), 0.0)
        self.assertIn('deterministic-ODE', sidecar)

    def write(self, solution, directory):
        write_solution(solution, directory)
        write_solution_paths(solution, directory)

    def test_loaded_solution_keeps_paths_and_noise(self):
        solution = benchmark_solution(ensemble(50, 20))
        with tempfile.TemporaryDirectory() as tmp:
            self.write(solution, Path(tmp))
            loaded = FbsdeSolution.load(tmp, lambda2=benchmark_discount())
        self.assertEqual(loaded.provenance, solution.provenance)
        self.assertEqual(loaded.x0, 1.0)
        self.assertTrue(np.array_equal(loaded.grid, solution.grid))
        self.assertTrue(np.array_equal(loaded.ensemble.dW, solution.ensemble.dW))
        self.assertEqual(loaded.ensemble.seed, solution.ensemble.seed)
        for name in ('X', 'Y', 'xtilde'):
            self.assertTrue(np.array_equal(getattr(loaded, name), getattr(solution, name)), name)
        self.assertTrue(np.array_equal(loaded.Z, np.broadcast_to(solution.Z, loaded.Z.shape)))
        self.assertTrue(np.array_equal(loaded.ytilde, solution.ytilde))
        self.assertTrue(np.array_equal(loaded.schedule.values, solution.schedule.values))

    def test_loaded_solution_drives_the_same_feedback_pair(self):
        market, discount = benchmark_market(), benchmark_discount()
        solution = benchmark_solution(ensemble(50, 20))
        with tempfile.TemporaryDirectory() as tmp:
            self.write(solution, Path(tmp))
            loaded = FbsdeSolution.load(tmp, lambda2=discount)
        original = EquilibriumStrategy(solution, market, 2.0, 2.0, discount)
        replayed = EquilibriumStrategy(loaded, market, 2.0, 2.0, discount)
        W = solution.ensemble.W
        for k in (0, 10, 19):
            c, pi = original.controls(solution.grid[k], solution.X[:, k], W[:, k, :], step=k)
            c_loaded, pi_loaded = replayed.controls(loaded.grid[k], loaded.X[:, k], W[:, k, :], step=k)
            self.assertTrue(np.allclose(c_loaded, c, rtol=0.0, atol=1e-14))
            self.assertTrue(np.allclose(pi_loaded, pi, rtol=0.0, atol=1e-14))

    def test_missing_artifacts_listed(self):
        solution = benchmark_solution(ensemble(20, 10))
        with tempfile.TemporaryDirectory() as tmp:
            write_solution(solution, Path(tmp))
            with self.assertRaises(StateError) as ctx:
                FbsdeSolution.load(tmp)
        self.assertEqual(ctx.exception.context['missing'], ['solution_ensemble.bin', 'solution_paths.csv'])

    def test_sidecar_must_match_ensemble(self):
        solution = benchmark_solution(ensemble(20, 10))
        with tempfile.TemporaryDirectory() as tmp:
            self.write(solution, Path(tmp))
            ensemble(20, 12).save(Path(tmp) / 'solution_ensemble.bin')
            with self.assertRaises(DomainError):
                FbsdeSolution.load(tmp)
