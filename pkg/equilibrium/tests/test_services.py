import json
import tempfile
from pathlib import Path

import pandas as pd
from django.test import SimpleTestCase

from common.exceptions import StateError
from equilibrium.export import strategy_frame, write_report, write_strategy
from equilibrium.extraction import pair_on_paths
from equilibrium.reports import SPIKE_COLUMNS, EquilibriumReport
from equilibrium.services import EquilibriumVerificationService
from equilibrium.spike import Direction
from equilibrium.tests.helpers import ShiftedPair, benchmark_solution
from fbsde.solvers import solve_tilde_bsde_deterministic
from market.strategies import ConstantStrategy, StoredStrategy
from market.tests.helpers import ensemble


class VerificationServiceTestCase(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.market, cls.discount, cls.u, cls.solution, cls.pair = benchmark_solution(400, 40)
        cls.ensemble = ensemble(400, 40, seed=9)

    def verify(self, pair, **options):
        options.setdefault('times', [0.0])
        options.setdefault('bank', [Direction(1.0, (0.0,)), Direction(0.0, (1.0,))])
        options.setdefault('n_candidates', 5)
        options.setdefault('n_inner', 8)
        options.setdefault('workers', 2)
        return EquilibriumVerificationService.verify(pair, self.solution, self.market, self.discount, self.discount,
                                                     self.u, self.u, self.ensemble, 1.0, 42, **options)

    def test_equilibrium_passes_every_stage(self):
        report = self.verify(self.pair)
        self.assertTrue(report.passed, report.failed_stages)
        self.assertEqual(set(report.verdicts),
                         {'first_order', 'spike', 'duality', 'equivalence', 'admissibility'})

    def test_flat_control_fails(self):
        report = self.verify(ConstantStrategy(0.05, [0.0], 1, 1), stages=['first_order', 'spike'])
        self.assertFalse(report.passed)
        self.assertIn('spike', report.failed_stages)
        self.assertIn('first_order', report.failed_stages)

    def test_stage_selection(self):
        report = self.verify(self.pair, stages=['first_order'])
        self.assertEqual(list(report.verdicts), ['first_order'])
        self.assertTrue(report.spike_frame().empty)

    def test_stored_pair_skips_spike(self):
        consumption, investment = pair_on_paths(self.pair, self.solution)
        stored = StoredStrategy(self.solution.grid, consumption, investment, 1, 1)
        report = self.verify(stored, stages=['first_order', 'spike'])
        self.assertEqual(list(report.verdicts), ['first_order'])
        self.assertTrue(report.verdicts['first_order'])
        self.assertTrue(any(note.startswith('spike:') for note in report.notes))

    def test_solution_without_paths_rejected(self):
        bare = solve_tilde_bsde_deterministic(self.market, self.discount, 2.0, 2.0, self.solution.grid)
        with self.assertRaises(StateError):
            EquilibriumVerificationService.verify(self.pair, bare, self.market, self.discount, self.discount,
                                                  self.u, self.u, self.ensemble, 1.0, 42)

    def test_independent_solves_agree(self):
        other = benchmark_solution(300, 80, seed=17)[4]
        comparison = EquilibriumVerificationService.compare_pairs(self.pair, other, self.market, self.ensemble, 1.0,
                                                                  tolerance=1e-6)
        self.assertTrue(comparison['passed'], comparison)

    def test_shifted_pair_disagrees(self):
        comparison = EquilibriumVerificationService.compare_pairs(self.pair, ShiftedPair(self.pair, shift=0.01),
                                                                  self.market, self.ensemble, 1.0)
        self.assertFalse(comparison['passed'])
        self.assertAlmostEqual(comparison['consumption']['mean'], 0.01, places=12)


class ExportTestCase(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.market, cls.discount, cls.u, cls.solution, cls.pair = benchmark_solution(100, 20)

    def test_strategy_table(self):
        frame = strategy_frame(self.pair, self.solution)
        self.assertEqual(list(frame.columns), ['t', 'c_star_mean', 'pi_star_1'])
        self.assertEqual(len(frame), 20)
        self.assertAlmostEqual(frame['pi_star_1'].iloc[0], 0.3, places=10)

    def test_written_artifacts(self):
        report = EquilibriumVerificationService.verify(
            self.pair, self.solution, self.market, self.discount, self.discount, self.u, self.u,
            self.solution.ensemble, 1.0, 42, stages=['first_order', 'duality'])
        with tempfile.TemporaryDirectory() as out_dir:
            write_strategy(self.pair, self.solution, out_dir)
            json_path, csv_path = write_report(report, out_dir)
            data = json.loads(Path(json_path).read_text())
            self.assertEqual(data['verdicts'], {'first_order': True, 'duality': True})
            self.assertEqual(list(pd.read_csv(csv_path).columns), SPIKE_COLUMNS)
            self.assertTrue((Path(out_dir) / 'strategy.csv').exists())

    def test_empty_report(self):
        report = EquilibriumReport(pair={'kind': 'constant'})
        self.assertTrue(report.passed)
        self.assertEqual(report.to_dict()['verdicts'], {})
