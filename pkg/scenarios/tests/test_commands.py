import json
import tempfile
from io import StringIO
from pathlib import Path

import pandas as pd
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import TestCase

from scenarios.models import ScenarioRun
from scenarios.tests.helpers import FLAT, scenario_file


class ScenarioCommandTestCase(TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def config(self, **blocks):
        return str(scenario_file(self.root, **blocks))

    def run_command(self, verb, *args, out='out', **options):
        stdout = StringIO()
        call_command(verb, *args, out=str(self.root / out), stdout=stdout, stderr=StringIO(), **options)
        return stdout.getvalue()

    def failing_command(self, verb, *args, **options):
        stdout = StringIO()
        with self.assertRaises(CommandError) as ctx:
            call_command(verb, *args, out=str(self.root / 'out'), stdout=stdout, stderr=StringIO(), **options)
        return ctx.exception, stdout.getvalue()

    def report(self, out='out'):
        return json.loads((self.root / out / 'report.json').read_text())


class SolveCommandTestCase(ScenarioCommandTestCase):
    def test_closed_form_investment(self):
        output = self.run_command('solve', self.config())
        self.assertIn('solve s1 passed', output)
        frame = pd.read_csv(self.root / 'out' / 'strategy.csv')
        self.assertEqual(list(frame.columns), ['t', 'c_star_mean', 'pi_star_1'])
        self.assertAlmostEqual(frame['pi_star_1'].iloc[0], 0.3, places=10)
        sidecar = json.loads((self.root / 'out' / 'solution.json').read_text())
        self.assertEqual(sidecar['provenance'], 'deterministic-ODE')

    def test_repeat_runs_are_byte_identical(self):
        config = self.config()
        self.run_command('solve', config, out='first')
        self.run_command('solve', config, out='second')
        for name in ('solution.csv', 'strategy.csv', 'solution.json', 'solution_paths.csv', 'solution_ensemble.bin'):
            self.assertEqual((self.root / 'first' / name).read_bytes(), (self.root / 'second' / name).read_bytes())
        self.assertEqual(self.report('first')['config_hash'], self.report('second')['config_hash'])

    def test_report_provenance(self):
        self.run_command('solve', self.config(), seed=11)
        report = self.report()
        self.assertEqual(report['verb'], 'solve')
        self.assertEqual(report['seed'], 11)
        self.assertEqual(report['exit_code'], 0)
        self.assertEqual(report['config']['numerics']['seed'], 11)
        self.assertEqual(report['files'], ['solution.csv', 'solution.json', 'solution_ensemble.bin',
                                           'solution_paths.csv', 'strategy.csv'])
        self.assertIn('engine_version', report)

    def test_csv_only_output(self):
        self.run_command('solve', self.config(output={'formats': ['csv']}))
        self.assertEqual(self.report()['files'],
                         ['solution.csv', 'solution_ensemble.bin', 'solution_paths.csv', 'strategy.csv'])

    def test_run_recorded(self):
        self.run_command('solve', self.config())
        run = ScenarioRun.objects.get()
        self.assertEqual(run.verb, 'solve')
        self.assertTrue(run.passed)
        self.assertEqual(run.config_hash, self.report()['config_hash'])
        self.assertEqual(int(run.seed), 42)

    def test_general_utility_is_input_error(self):
        config = self.config(preferences={'u1': {'kind': 'fromm_imkeller'}})
        error, _ = self.failing_command('solve', config)
        self.assertEqual(error.returncode, 2)

    def test_schema_violation_is_input_error(self):
        error, _ = self.failing_command('solve', self.config(market={'d1': 2}))
        self.assertEqual(error.returncode, 2)
        self.assertFalse(ScenarioRun.objects.exists())


class VerifyCommandTestCase(ScenarioCommandTestCase):
    def test_equilibrium_passes(self):
        output = self.run_command('verify', self.config())
        self.assertIn('spike: PASS', output)
        report = self.report()
        self.assertTrue(report['passed'])
        self.assertIn('spike_table.csv', report['files'])
        self.assertIn('equilibrium_report.json', report['files'])

    def test_flat_control_fails_on_spike(self):
        error, output = self.failing_command('verify', self.config(), strategy=str(FLAT))
        self.assertEqual(error.returncode, 1)
        self.assertIn('spike: FAIL', output)
        self.assertIn('spike cell t=0.0', output)
        report = self.report()
        self.assertFalse(report['passed'])
        self.assertTrue(report['summary']['spike_failures'])
        self.assertEqual(ScenarioRun.objects.get().exit_code, 1)

    def test_running_discount_does_not_matter(self):
        config = self.config(preferences={'lambda1': {'kind': 'exponential', 'delta': 0.5}})
        self.run_command('verify', config)
        self.assertTrue(self.report()['passed'])

    def test_general_utilities_need_solution_artifacts(self):
        config = self.config(preferences={'u2': {'kind': 'fromm_imkeller'}})
        error, _ = self.failing_command('verify', config)
        self.assertEqual(error.returncode, 2)

    def solved(self):
        self.run_command('solve', self.config(), out='solved')
        return str(self.root / 'solved')

    def verify_outcome(self, config, **options):
        try:
            self.run_command('verify', config, **options)
        except CommandError as exc:
            return exc.returncode
        return 0

    def test_general_utilities_verified_from_exported_solution(self):
        solution = self.solved()
        config = self.config(preferences={'u2': {'kind': 'fromm_imkeller', 'n_nodes': 201}})
        self.assertIn(self.verify_outcome(config, solution=solution), (0, 1))
        report = self.report()
        self.assertEqual(report['summary']['solution'], solution)
        self.assertEqual(report['summary']['pair']['kind'], 'stored')
        verdicts = report['summary']['verdicts']
        self.assertNotIn('spike', verdicts)
        self.assertTrue({'first_order', 'duality', 'equivalence'} <= set(verdicts))
        details = json.loads((self.root / 'out' / 'equilibrium_report.json').read_text())
        self.assertTrue(any(note.startswith('spike:') for note in details['notes']))

    def test_exported_solution_verifies_like_inline(self):
        solution = self.solved()
        output = self.run_command('verify', self.config(), solution=solution)
        self.assertIn('spike: PASS', output)
        report = self.report()
        self.assertTrue(report['passed'])
        self.assertEqual(report['summary']['solution'], solution)

    def test_incomplete_solution_artifacts(self):
        solution = self.solved()
        (Path(solution) / 'solution_paths.csv').unlink()
        error, _ = self.failing_command('verify', self.config(), solution=solution)
        self.assertEqual(error.returncode, 2)

    def test_malformed_strategy(self):
        strategy = self.root / 'strategy.json'
        strategy.write_text(json.dumps({'kind': 'constant', 'c': 0.05}))
        error, _ = self.failing_command('verify', self.config(), strategy=str(strategy))
        self.assertEqual(error.returncode, 2)


class EquivalenceCommandTestCase(ScenarioCommandTestCase):
    def test_equilibrium_dominates_candidates(self):
        self.run_command('equivalence', self.config())
        report = self.report()
        self.assertTrue(report['passed'])
        self.assertTrue(report['summary']['uniqueness'])
        frame = pd.read_csv(self.root / 'out' / 'equivalence.csv')
        self.assertEqual(len(frame), 5)


class MomentsCommandTestCase(ScenarioCommandTestCase):
    def test_default_direction(self):
        self.run_command('moments', self.config())
        frame = pd.read_csv(self.root / 'out' / 'moments.csv')
        self.assertEqual(list(frame.columns), ['gamma', 'eps', 'moment', 'se'])
        self.assertEqual(len(frame), 8)
        self.assertTrue(self.report()['summary']['exp_finite'])

    def test_zero_direction_skips_fit(self):
        config = self.config(verify={'moment_direction': {'t': 0.0, 'kappa': 0.0, 'eta': [0.0]}})
        output = self.run_command('moments', config)
        self.assertIn('no slope', output)
        frame = pd.read_csv(self.root / 'out' / 'moments.csv')
        self.assertTrue((frame['moment'] == 0.0).all())
        self.assertEqual(self.report()['summary']['slopes'], {'1.0': None, '2.0': None})


class ValidateCommandTestCase(ScenarioCommandTestCase):
    def test_s1_preferences_valid(self):
        self.run_command('validate', self.config())
        report = self.report()
        self.assertEqual(report['summary']['verdicts'], {'lambda1': True, 'lambda2': True, 'u1': True, 'u2': True})
        self.assertEqual(report['files'], ['validation.json'])
