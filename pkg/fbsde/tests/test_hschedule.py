import numpy as np
from django.test import SimpleTestCase

from common.exceptions import DomainError
from common.numerics import uniform_grid
from fbsde.hschedule import HSchedule, continuity_gap, h_closed_form


class HClosedFormTestCase(SimpleTestCase):
    def test_terminal_value(self):
        self.assertEqual(h_closed_form(1.0, 0.0, 2.0, 2.0, 1.0), 1.0)
        self.assertEqual(h_closed_form(1.0, 0.1, 1.0, 3.0, 1.0), 1.0)

    def test_zero_rate(self):
        self.assertAlmostEqual(h_closed_form(0.0, 0.0, 1.0, 1.0, 1.0), 0.5, places=15)

    def test_positive_rate(self):
        self.assertAlmostEqual(h_closed_form(0.0, 0.1, 1.0, 1.0, 1.0), 0.538659, delta=1e-5)

    def test_negative_rate_rejected(self):
        with self.assertRaises(DomainError):
            h_closed_form(0.0, -0.01, 1.0, 1.0, 1.0)

    def test_time_outside_horizon_rejected(self):
        with self.assertRaises(DomainError):
            h_closed_form(1.5, 0.0, 1.0, 1.0, 1.0)

    def test_continuity_in_rate(self):
        self.assertLessEqual(continuity_gap(uniform_grid(0.0, 1.0, 999), 1.0, 1.0, 1.0), 1e-5)


class HScheduleTestCase(SimpleTestCase):
    def test_matches_rk4_integration(self):
        grid = uniform_grid(0.0, 1.0, 999)
        for r in (0.0, 0.05, 0.1):
            for rho in (0.5, 1.0, 2.0):
                with self.subTest(r=r, rho=rho):
                    schedule = HSchedule(grid, r, 1.0, rho, 1.0)
                    self.assertLessEqual(schedule.rk4_gap(), 1e-8)

    def test_discrete_ode_residual(self):
        schedule = HSchedule(uniform_grid(0.0, 1.0, 200), 0.1, 2.0, 2.0, 1.0)
        self.assertLessEqual(schedule.ode_residual(), 1e-6)

    def test_positive_and_increasing(self):
        for r, gamma1, gamma2 in ((0.0, 2.0, 2.0), (0.05, 1.0, 2.0), (0.1, 2.0, 1.0)):
            values = HSchedule(uniform_grid(0.0, 1.0, 200), r, gamma1, gamma2, 1.0).values
            self.assertTrue(np.all(values > 0))
            self.assertTrue(np.all(np.diff(values) > 0))
            self.assertEqual(values[-1], 1.0)
