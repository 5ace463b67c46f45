"""
Shared surface of the scenario commands: config path, overrides, exit codes
"""

import logging

from django.core.management.base import BaseCommand, CommandError

from common.exceptions import ConfigError, EngineError
from scenarios.services import ScenarioService

logger = logging.getLogger(__name__)


def seed_value(value):
    seed = int(value)
    if not 0 <= seed < 2 ** 64:
        raise ValueError(value)
    return seed


class ScenarioCommand(BaseCommand):
    verb = None

    def add_arguments(self, parser):
        parser.add_argument('config', help='Scenario JSON file')
        parser.add_argument('--out', default=None, help='Output directory (default: the config output block)')
        parser.add_argument('--seed', type=seed_value, default=None, help='Master seed, 0 <= seed < 2**64')
        parser.add_argument('--paths', type=int, default=None, help='Number of Monte Carlo paths')
        parser.add_argument('--steps', type=int, default=None, help='Number of time steps')
        parser.add_argument('--strict', action='store_true',
                            help='Raise on LSMC truncation above the limit instead of warning')

    def run(self, config, options):
        raise NotImplementedError

    def handle(self, *args, **options):
        overrides = {key: options[key] for key in ('out', 'seed', 'paths', 'steps')}
        try:
            config = ScenarioService.load_config(options['config'], overrides)
            self.stdout.write(f"{self.verb} {config['name']} (seed {config['numerics']['seed']})...")
            result = self.run(config, options)
        except ConfigError as exc:
            for field, messages in exc.violations.items():
                self.stderr.write(self.style.ERROR(f'  {field}: {messages}'))
            raise CommandError(str(exc), returncode=exc.exit_code)
        except EngineError as exc:
            logger.error(f'{self.verb} failed: {exc}')
            raise CommandError(f'{type(exc).__name__}: {exc}', returncode=exc.exit_code)

        self.report(result)
        self.stdout.write(f'Report: {result.out_dir / "report.json"}')
        if not result.passed:
            raise CommandError(f'{self.verb} {result.name} failed verification', returncode=result.exit_code)
        self.stdout.write(self.style.SUCCESS(f'{self.verb} {result.name} passed'))

    def report(self, result):
        for name in result.files:
            self.stdout.write(f'  wrote {name}')
