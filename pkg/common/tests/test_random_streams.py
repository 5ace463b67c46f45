import numpy as np
from django.test import SimpleTestCase

from common.random_streams import block_normals, substream


class SubstreamTestCase(SimpleTestCase):
    def test_same_key_same_draws(self):
        first = substream(42, 'market', 3).standard_normal(5)
        second = substream(42, 'market', 3).standard_normal(5)
        np.testing.assert_array_equal(first, second)

    def test_streams_are_independent(self):
        market = substream(42, 'market').standard_normal(5)
        candidates = substream(42, 'candidates').standard_normal(5)
        other_seed = substream(43, 'market').standard_normal(5)
        self.assertFalse(np.array_equal(market, candidates))
        self.assertFalse(np.array_equal(market, other_seed))

    def test_full_width_seed(self):
        draws = substream(2 ** 64 - 1, 'lsmc').standard_normal(3)
        self.assertEqual(draws.shape, (3,))

    def test_unknown_stream(self):
        with self.assertRaises(KeyError):
            substream(42, 'weather')

    def test_prefix_independent_of_row_count(self):
        short = block_normals(7, 'market', 10, (4, 2), 8)
        long = block_normals(7, 'market', 30, (4, 2), 8)
        np.testing.assert_array_equal(short, long[:10])
