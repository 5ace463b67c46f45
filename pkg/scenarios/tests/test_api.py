from django.test import TestCase
from rest_framework.test import APIClient

from scenarios.models import ScenarioRun
from scenarios.services import ScenarioResult, ScenarioService


class ScenarioRunApiTestCase(TestCase):
    def setUp(self):
        self.client = APIClient()
        for verb, passed in (('solve', True), ('verify', False)):
            result = ScenarioResult(verb=verb, name='s1', config_hash='a' * 64, seed=42, passed=passed,
                                    out_dir='artifacts/s1')
            ScenarioService.record_run(result, {'verb': verb, 'passed': passed})

    def test_list_runs(self):
        response = self.client.get('/api/v1/scenarios/runs/')
        self.assertEqual(response.status_code, 200)
        self.assertEqual(len(response.json()), 2)
        self.assertEqual(response['X-Engine-Version'], '1.0.0')

    def test_filter_by_verb(self):
        response = self.client.get('/api/v1/scenarios/runs/', {'verb': 'verify'})
        runs = response.json()
        self.assertEqual(len(runs), 1)
        self.assertFalse(runs[0]['passed'])
        self.assertEqual(runs[0]['exit_code'], 1)

    def test_read_only(self):
        response = self.client.post('/api/v1/scenarios/runs/', {'verb': 'solve'}, format='json')
        self.assertEqual(response.status_code, 405)
        self.assertEqual(ScenarioRun.objects.count(), 2)

    def test_str(self):
        run = ScenarioRun.objects.get(verb='solve')
        self.assertEqual(str(run), f"solve s1 ({'a' * 12}) PASS")
