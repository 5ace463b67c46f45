import json
import tempfile
from pathlib import Path

from django.test import SimpleTestCase

from common.exceptions import ConfigError
from preferences.utilities import SoftplusKappa
from scenarios import builders
from scenarios.serializers import StrategySerializer
from scenarios.services import ScenarioService, config_hash
from scenarios.tests.helpers import FLAT, S1, s1_data


class LoadConfigTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def write(self, data):
        path = Path(self.tmp.name) / 'config.json'
        path.write_text(json.dumps(data) if not isinstance(data, str) else data)
        return path

    def violations(self, data):
        with self.assertRaises(ConfigError) as ctx:
            ScenarioService.load_config(self.write(data))
        return ctx.exception.violations

    def test_bundled_s1_loads(self):
        config = ScenarioService.load_config(S1)
        self.assertEqual(config['name'], 's1')
        self.assertEqual(config['market']['theta'], {'kind': 'constant', 'value': 0.3, 'bound': 1.0})
        self.assertEqual(config['market']['r'], {'kind': 'constant', 'value': 0.0})
        self.assertEqual(config['preferences']['lambda1'], config['preferences']['lambda2'])

    def test_d1_above_d_names_the_field(self):
        data = s1_data()
        data['market']['d1'] = 2
        violations = self.violations(data)
        self.assertIn('d1', violations['market'])

    def test_default_seed_injected(self):
        data = s1_data()
        data.pop('numerics')
        config = ScenarioService.load_config(self.write(data))
        self.assertEqual(config['numerics']['seed'], 42)
        self.assertEqual(config['verify']['eps_ladder'], [0.2, 0.1, 0.05, 0.025])

    def test_unknown_keys_rejected(self):
        data = s1_data()
        data['numerics']['n_path'] = 10
        data['extra'] = True
        violations = self.violations(data)
        self.assertIn('extra', violations)
        self.assertIn('n_path', violations['numerics'])

    def test_every_violation_listed(self):
        data = s1_data()
        data['market']['T'] = -1.0
        data['verify']['p'] = 1.0
        data['numerics']['n_paths'] = 0
        violations = self.violations(data)
        self.assertIn('T', violations['market'])
        self.assertIn('p', violations['verify'])
        self.assertIn('n_paths', violations['numerics'])

    def test_declared_bound_must_be_positive(self):
        data = s1_data()
        data['market']['theta']['bound'] = 0.0
        self.assertIn('theta', self.violations(data)['market'])

    def test_spike_times_inside_horizon(self):
        data = s1_data()
        data['verify']['times'] = [0.0, 1.0]
        self.assertIn('verify', self.violations(data))

    def test_induced_discount_only_for_lambda1(self):
        data = s1_data()
        data['preferences']['lambda1'] = {'kind': 'induced'}
        ScenarioService.load_config(self.write(data))
        data['preferences']['lambda2'] = {'kind': 'induced'}
        self.assertIn('lambda2', self.violations(data)['preferences'])

    def test_invalid_json(self):
        self.assertIn('json', self.violations('{"market": '))

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            ScenarioService.load_config(Path(self.tmp.name) / 'missing.json')

    def test_overrides(self):
        config = ScenarioService.load_config(S1, {'seed': 7, 'paths': 500, 'steps': None, 'out': self.tmp.name})
        self.assertEqual(config['numerics']['seed'], 7)
        self.assertEqual(config['numerics']['n_paths'], 500)
        self.assertEqual(config['numerics']['n_steps'], 100)
        self.assertEqual(config['output']['directory'], self.tmp.name)

    def test_hash_ignores_output_block(self):
        first = ScenarioService.load_config(S1)
        second = ScenarioService.load_config(S1, {'out': self.tmp.name})
        third = ScenarioService.load_config(S1, {'seed': 1})
        self.assertEqual(config_hash(first), config_hash(second))
        self.assertNotEqual(config_hash(first), config_hash(third))
        self.assertEqual(len(config_hash(first)), 64)


class StrategySerializerTestCase(SimpleTestCase):
    def test_flat_control(self):
        serializer = StrategySerializer(data=json.loads(FLAT.read_text()))
        self.assertTrue(serializer.is_valid(), serializer.errors)

    def test_table_needs_all_columns(self):
        serializer = StrategySerializer(data={'kind': 'table', 'times': [0.0, 1.0]})
        self.assertFalse(serializer.is_valid())
        self.assertEqual(set(serializer.errors), {'consumption', 'investment'})


class KappaFieldTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def load(self, kappa):
        data = s1_data()
        data['preferences']['u2'] = {'kind': 'fromm_imkeller', 'kappa': kappa, 'n_nodes': 201}
        path = Path(self.tmp.name) / 'config.json'
        path.write_text(json.dumps(data))
        return ScenarioService.load_config(path)

    def test_builtin_round_trips_through_to_dict(self):
        written = SoftplusKappa.softplus_shift().to_dict()
        config = self.load(written)
        self.assertEqual(config['preferences']['u2']['kappa'], written)
        self.assertEqual(builders.kappa(config['preferences']['u2']['kappa']).to_dict(), written)

    def test_coefficients_round_trip_through_to_dict(self):
        written = SoftplusKappa(0.1, 0.5, 2.0, 1.5).to_dict()
        config = self.load(written)
        rebuilt = builders.kappa(config['preferences']['u2']['kappa'])
        self.assertEqual(rebuilt.to_dict(), written)
        self.assertEqual((rebuilt.a0, rebuilt.a1, rebuilt.a2, rebuilt.b), (0.1, 0.5, 2.0, 1.5))

    def test_keyword_coefficients_rejected(self):
        with self.assertRaises(ConfigError) as ctx:
            self.load({'a0': 0.0, 'a1': 1.0, 'a2': 1.0, 'b': 1.0})
        self.assertIn('kappa', ctx.exception.violations['preferences']['u2'])

    def test_unknown_builtin_rejected(self):
        with self.assertRaises(ConfigError) as ctx:
            self.load({'builtin': 'cubic'})
        self.assertIn('kappa', ctx.exception.violations['preferences']['u2'])

    def test_wrong_coefficient_count_rejected(self):
        for coefficients in ([0.0, 1.0, 1.0], [0.0, 1.0, 1.0, 1.0, 1.0], [0.0, 'one', 1.0, 1.0]):
            with self.subTest(coefficients=coefficients):
                with self.assertRaises(ConfigError):
                    self.load({'coefficients': coefficients})

    def test_non_convex_coefficients_rejected(self):
        with self.assertRaises(ConfigError) as ctx:
            self.load({'coefficients': [0.0, 1.0, -1.0, 1.0]})
        self.assertIn('kappa', ctx.exception.violations['preferences']['u2'])
