from scenarios.management.base import ScenarioCommand
from scenarios.services import ScenarioService


class Command(ScenarioCommand):
    help = 'Probe the moment scaling of the perturbation process over the window ladder'
    verb = 'moments'

    def run(self, config, options):
        return ScenarioService.run_moments(config)

    def report(self, result):
        super().report(result)
        for gamma, slope in result.summary['slopes'].items():
            if slope is None:
                self.stdout.write(f'  gamma={gamma}: no slope')
            else:
                self.stdout.write(f'  gamma={gamma}: log-log slope {slope:.4f}')
        for note in result.summary['notes']:
            self.stdout.write(self.style.WARNING(f'  {note}'))
