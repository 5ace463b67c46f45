from dataclasses import dataclass, field

import pandas as pd

SPIKE_COLUMNS = ['t', 'kappa', 'eta_index', 'eps', 'quotient', 'se']


@dataclass
class EquilibriumReport:
    """Outcome of every verification stage for one pair; verdicts decide the exit code"""
    pair: dict
    first_order: object = None
    spike: object = None
    duality: object = None
    se_scaling: dict = None
    equivalence: object = None
    admissibility: object = None
    uniqueness: dict = None
    tolerance: float = 1e-10
    notes: list = field(default_factory=list)

    @property
    def verdicts(self):
        verdicts = {}
        if self.first_order is not None:
            verdicts['first_order'] = self.first_order.passed(self.tolerance)
        if self.spike is not None:
            verdicts['spike'] = self.spike.passed
        if self.duality is not None:
            verdicts['duality'] = self.duality.passed
        if self.equivalence is not None:
            verdicts['equivalence'] = self.equivalence.passed and self.equivalence.first_order_passed
        if self.admissibility is not None:
            verdicts['admissibility'] = self.admissibility.passed
        if self.uniqueness is not None:
            verdicts['uniqueness'] = self.uniqueness['passed']
        return verdicts

    @property
    def passed(self):
        return all(self.verdicts.values())

    @property
    def failed_stages(self):
        return [stage for stage, passed in self.verdicts.items() if not passed]

    def spike_frame(self):
        rows = self.spike.rows if self.spike is not None else []
        return pd.DataFrame(rows, columns=SPIKE_COLUMNS)

    def to_dict(self):
        def section(value):
            return value.to_dict() if value is not None else None

        return {
            'passed': self.passed,
            'verdicts': self.verdicts,
            'pair': self.pair,
            'first_order_residuals': section(self.first_order),
            'spike': section(self.spike),
            'duality': section(self.duality),
            'se_scaling': self.se_scaling,
            'equivalence': section(self.equivalence),
            'admissibility': section(self.admissibility),
            'uniqueness': self.uniqueness,
            'tolerance': self.tolerance,
            'notes': self.notes,
        }
