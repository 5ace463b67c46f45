"""
Tests for the time-consistent equivalence check.
"""

import numpy as np
from django.test import SimpleTestCase

from equilibrium.equivalence import candidate_bank, equivalence_gap
from equilibrium.tests.helpers import benchmark_solution
from market.perturbations import SmoothProfile
from market.strategies import ConstantStrategy
from market.tests.helpers import benchmark_market, ensemble
from preferences.discounting import ExponentialDiscount


class CandidateBankTestCase(SimpleTestCase):
    def test_candidates_depend_on_seed_and_index_only(self):
        market = benchmark_market()
        short = candidate_bank(42, 3, market)
        long = candidate_bank(42, 10, market)
        for first, second in zip(short, long):
            np.testing.assert_array_equal(first.a, second.a)
            np.testing.assert_array_equal(first.b, second.b)
        other = candidate_bank(43, 1, market)[0]
        self.assertFalse(np.array_equal(other.a, short[0].a))

    def test_candidates_are_bounded(self):
        market = benchmark_market()
        for profile in candidate_bank(42, 20, market, n_modes=3, scale=0.2):
            self.assertLessEqual(profile.bound, 0.2 * (1 + 1 / 2 + 1 / 3))


class EquivalenceGapTestCase(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.market, cls.discount, cls.u, cls.solution, cls.pair = benchmark_solution(2000, 200)
        cls.ensemble = ensemble(2000, 200, seed=21)

    def gap(self, pair, lambda2=None, **options):
        return equivalence_gap(pair, self.market, lambda2 or self.discount, self.u, self.u,
                               options.pop('n_candidates', 20), self.ensemble, 1.0, 42, **options)

    def test_equilibrium_beats_candidates(self):
        result = self.gap(self.pair)
        self.assertTrue(result.passed, result.failures)
        self.assertTrue(result.first_order_passed)
        self.assertEqual(result.constants['n_evaluated'], 20)
        for row in result.rows:
            self.assertEqual(row['concavity_violations'], 0)
            self.assertLess(row['gap'], row['first_order'] + 1e-12)

    def test_pair_itself_gives_zero_gap(self):
        itself = SmoothProfile([0.0], [[0.0]], 1, 1, 1.0)
        result = self.gap(self.pair, candidates=[itself])
        row = result.rows[0]
        self.assertEqual(row['gap'], 0.0)
        self.assertEqual(row['gap_se'], 0.0)
        self.assertTrue(row['passed'])

    def test_flat_control_is_improved(self):
        flat = ConstantStrategy(0.05, [0.0], 1, 1)
        raise_consumption = SmoothProfile([0.5], [[0.3]], 1, 1, 1.0)
        result = self.gap(flat, candidates=[raise_consumption])
        self.assertFalse(result.passed)
        self.assertEqual(len(result.failures), 1)


class ExponentialEquivalenceTestCase(SimpleTestCase):
    def test_reward_identity_and_rankings(self):
        discount = ExponentialDiscount(1.0, 0.5)
        market, _, u, _, pair = benchmark_solution(1000, 100, discount=discount)
        result = equivalence_gap(pair, market, discount, u, u, 10, ensemble(1000, 100, seed=3), 1.0, 42)
        self.assertTrue(result.constants['identity_passed'], result.constants['identity_gap'])
        self.assertTrue(result.constants['verdicts_agree'])
        self.assertTrue(result.constants['rankings_agree'])
        for row in result.rows:
            self.assertAlmostEqual(row['gap'] * np.exp(-0.5), row['gap_R'], delta=1e-12)
