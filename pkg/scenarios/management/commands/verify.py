from scenarios.management.base import ScenarioCommand
from scenarios.services import ScenarioService


class Command(ScenarioCommand):
    help = 'Verify the scenario equilibrium, or a supplied strategy, against every equilibrium check'
    verb = 'verify'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--strategy', default=None, help='Strategy JSON to verify instead of the equilibrium')
        parser.add_argument('--solution', default=None,
                            help='Directory with solution artifacts written by solve; required for general utilities')

    def run(self, config, options):
        return ScenarioService.run_verify(config, strategy_path=options['strategy'], solution_dir=options['solution'],
                                          strict=options['strict'])

    def report(self, result):
        super().report(result)
        for stage, passed in result.summary['verdicts'].items():
            style = self.style.SUCCESS if passed else self.style.ERROR
            self.stdout.write(style(f"  {stage}: {'PASS' if passed else 'FAIL'}"))
        for cell in result.summary['spike_failures']:
            self.stdout.write(self.style.ERROR(
                f"  spike cell t={cell['t']} kappa={cell['kappa']} eta_index={cell['eta_index']}: "
                f"limit {cell['limit']:.6g} (se {cell['limit_se']:.3g})"
            ))
