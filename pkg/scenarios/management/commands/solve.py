from scenarios.management.base import ScenarioCommand
from scenarios.services import ScenarioService


class Command(ScenarioCommand):
    help = 'Solve the FBSDE of an exponential-utility scenario and write the equilibrium strategy table'
    verb = 'solve'

    def run(self, config, options):
        return ScenarioService.run_solve(config, strict=options['strict'])

    def report(self, result):
        super().report(result)
        self.stdout.write(f"  provenance {result.summary['provenance']}, h(0) = {result.summary['h0']:.10g}")
