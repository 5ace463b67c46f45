"""
Report containers returned by the validation and verification services
"""

from dataclasses import dataclass, field, asdict

import numpy as np


@dataclass
class Estimate:
    """Monte Carlo estimate paired with its standard error"""
    mean: float
    se: float
    n: int

    @classmethod
    def from_samples(cls, samples):
        samples = np.asarray(samples, dtype=float).ravel()
        n = samples.size
        if n == 0:
            return cls(mean=float('nan'), se=float('nan'), n=0)
        se = float(samples.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        return cls(mean=float(samples.mean()), se=se, n=int(n))

    def within(self, target, n_se, atol=0.0):
        return abs(self.mean - target) <= n_se * self.se + atol

    def to_dict(self):
        return asdict(self)


@dataclass
class ValidationReport:
    """Outcome of a report-based check; never raises, lists every violation"""
    subject: str
    passed: bool = True
    violations: list = field(default_factory=list)
    constants: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def flag(self, check, message, **where):
        self.passed = False
        self.violations.append({'check': check, 'message': message, **where})

    def violated(self, check):
        return any(violation['check'] == check for violation in self.violations)

    def to_dict(self):
        return {
            'subject': self.subject,
            'passed': self.passed,
            'violations': self.violations,
            'constants': self.constants,
            'notes': self.notes,
        }
