"""
Tests for path ensembles: reproducibility, increment variance, refinement
and the binary file format.
"""

import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from common.exceptions import DomainError, GridError
from common.numerics import uniform_grid
from market.ensemble import PathEnsemble
from market.tests.helpers import ensemble


class PathEnsembleTestCase(SimpleTestCase):
    def test_same_seed_is_bit_identical(self):
        first = ensemble(n_paths=300, n_steps=20)
        second = ensemble(n_paths=300, n_steps=20)
        self.assertTrue(np.array_equal(first.dW, second.dW))

    def test_different_seed_differs(self):
        self.assertFalse(np.array_equal(ensemble(n_paths=50, seed=1).dW, ensemble(n_paths=50, seed=2).dW))

    def test_prefix_of_paths_is_stable(self):
        small = ensemble(n_paths=100, n_steps=10)
        large = ensemble(n_paths=3000, n_steps=10)
        self.assertTrue(np.array_equal(small.dW, large.dW[:100]))

    def test_increment_variance_matches_step(self):
        n_paths = 20000
        paths = ensemble(n_paths=n_paths, n_steps=2)
        ratio = paths.increment_variance()[:, 0] / paths.steps
        self.assertLessEqual(np.max(np.abs(ratio - 1.0)), 4.0 / np.sqrt(n_paths))

    def test_brownian_paths_start_at_zero(self):
        paths = ensemble(n_paths=10, n_steps=5)
        self.assertTrue(np.all(paths.W[:, 0, :] == 0.0))
        self.assertTrue(np.allclose(paths.W[:, -1, :], paths.dW.sum(axis=1)))

    def test_refine_keeps_brownian_endpoints(self):
        coarse = ensemble(n_paths=200, n_steps=10)
        fine = coarse.refine([0.123, 0.5, 0.777])
        self.assertEqual(fine.n_steps, 12)
        self.assertTrue(fine.contains(0.123))
        self.assertTrue(np.allclose(fine.W[:, -1, :], coarse.W[:, -1, :], atol=1e-13))
        self.assertTrue(np.allclose(fine.W[:, fine.index_of(0.5), :], coarse.W[:, 5, :], atol=1e-13))

    def test_refine_window_puts_four_steps_inside(self):
        fine = ensemble(n_paths=20, n_steps=10).refine_window(0.25, 0.02)
        self.assertGreaterEqual(fine.steps_in(0.25, 0.27), 4)

    def test_refine_window_past_horizon(self):
        with self.assertRaises(DomainError):
            ensemble(n_paths=5, n_steps=10).refine_window(0.9, 0.2)

    def test_index_of_rejects_off_grid_time(self):
        with self.assertRaises(GridError):
            ensemble(n_paths=5, n_steps=10).index_of(0.15)

    def test_save_and_load_round_trip(self):
        paths = PathEnsemble.build(11, uniform_grid(0.0, 1.0, 6), 40, 2)
        with tempfile.TemporaryDirectory() as tmp:
            target = paths.save(Path(tmp) / 'noise.bin')
            loaded = PathEnsemble.load(target)
            raw = target.read_bytes()
        self.assertEqual(loaded.seed, 11)
        self.assertTrue(np.array_equal(loaded.grid, paths.grid))
        self.assertTrue(np.array_equal(loaded.dW, paths.dW))
        self.assertEqual(len(raw), 8 + 32 + 8 * 7 + 8 * 40 * 6 * 2)

    def test_load_rejects_foreign_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            target = Path(tmp) / 'other.bin'
            target.write_bytes(b'not an ensemble')
            with self.assertRaises(DomainError):
                PathEnsemble.load(target)
