from scenarios.management.base import ScenarioCommand
from scenarios.services import ScenarioService


class Command(ScenarioCommand):
    help = 'Check the scenario discounts and utilities against their structural conditions'
    verb = 'validate'

    def run(self, config, options):
        return ScenarioService.run_validate(config)

    def report(self, result):
        super().report(result)
        for subject, violations in result.summary['violations'].items():
            for violation in violations:
                self.stdout.write(self.style.ERROR(f"  {subject}: {violation['check']}: {violation['message']}"))
