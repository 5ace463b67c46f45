from scenarios.management.base import ScenarioCommand
from scenarios.services import ScenarioService


class Command(ScenarioCommand):
    help = 'Compare the equilibrium with random candidates under the time-consistent reward'
    verb = 'equivalence'

    def run(self, config, options):
        return ScenarioService.run_equivalence(config, strict=options['strict'])

    def report(self, result):
        super().report(result)
        summary = result.summary
        if summary['skipped']:
            self.stdout.write(self.style.WARNING(f"  {summary['skipped']} candidates skipped"))
        for row in summary['failures']:
            self.stdout.write(self.style.ERROR(
                f"  candidate {row['candidate']}: gap {row['gap']:.6g} (se {row['gap_se']:.3g})"
            ))
        if not summary['uniqueness']:
            self.stdout.write(self.style.ERROR('  independent solve disagrees with the equilibrium'))
