"""
Exception hierarchy shared by the engine apps.

Every error carries the exit code the command-line surface reports for it:
2 for bad input, 3 for numerical failure.
"""


class EngineError(Exception):
    """Base class for all engine errors"""
    exit_code = 2

    def __init__(self, message, **context):
        super().__init__(message)
        self.message = message
        self.context = context

    def __str__(self):
        if not self.context:
            return self.message
        details = ', '.join(f'{key}={value}' for key, value in self.context.items())
        return f'{self.message} ({details})'

    def to_dict(self):
        return {
            'error': type(self).__name__,
            'message': self.message,
            'context': {key: str(value) for key, value in self.context.items()},
        }


class DomainError(EngineError, ValueError):
    """Input outside the mathematical domain of an operation"""


class RangeError(EngineError, ValueError):
    """Input outside a tabulated or configured range"""


class GridError(EngineError):
    """Time grid cannot resolve a requested window"""


class StateError(EngineError):
    """Operation called before the data it needs exists"""


class ConfigError(EngineError):
    """Scenario configuration violates the schema"""

    def __init__(self, message, violations=None, **context):
        super().__init__(message, **context)
        self.violations = violations or {}

    def to_dict(self):
        data = super().to_dict()
        data['violations'] = self.violations
        return data


class NumericError(EngineError, ArithmeticError):
    """Overflow, NaN, non-convergence or ill-conditioning"""
    exit_code = 3
