import json
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd
from django.test import SimpleTestCase

from common.artifacts import to_json, write_csv, write_json
from common.exceptions import ConfigError, DomainError, NumericError, StateError


class ArtifactsTestCase(SimpleTestCase):
    def test_csv_uses_seventeen_digits(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = write_csv(pd.DataFrame({'t': [0.1], 'value': [1.0 / 3.0]}), Path(tmp) / 'nested' / 'table.csv')
            self.assertEqual(path.read_text(), 't,value\n0.10000000000000001,0.33333333333333331\n')

    def test_json_sorted_and_numpy_aware(self):
        text = to_json({'b': np.float64(0.5), 'a': np.arange(2)})
        self.assertEqual(list(json.loads(text)), ['a', 'b'])
        self.assertEqual(json.loads(text)['a'], [0, 1])

    def test_write_json(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = write_json({'seed': np.int64(42)}, Path(tmp) / 'report.json')
            self.assertEqual(json.loads(path.read_text()), {'seed': 42})


class ExceptionsTestCase(SimpleTestCase):
    def test_exit_codes(self):
        self.assertEqual(DomainError('bad').exit_code, 2)
        self.assertEqual(StateError('early').exit_code, 2)
        self.assertEqual(NumericError('overflow').exit_code, 3)

    def test_context_in_message(self):
        error = NumericError('Wealth overflowed', step=3, path=17)
        self.assertEqual(str(error), 'Wealth overflowed (step=3, path=17)')
        self.assertIsInstance(error, ArithmeticError)

    def test_config_error_carries_violations(self):
        error = ConfigError('Scenario config violates the schema', violations={'market': {'d1': ['too large']}})
        self.assertEqual(error.to_dict()['violations'], {'market': {'d1': ['too large']}})
        self.assertEqual(error.to_dict()['error'], 'ConfigError')
