"""Engine exception hierarchy.

Numerical failures carry enough context to be reported by the CLI with a
machine-readable category (exit code 3); user/config errors map to exit
code 2.
"""


class UslvError(Exception):
    """Base class for all engine errors."""


class ConfigError(UslvError):
    """Bad configuration, missing files, malformed inputs (CLI exit 2)."""


class InvalidGeneratorError(UslvError):
    """A constructed matrix is not a valid Markov generator."""

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = violations or []


class FitFailure(UslvError):
    """Optimizer stagnated above tolerance; carries the best residuals."""

    def __init__(self, message, residuals=None, report=None):
        super().__init__(message)
        self.residuals = residuals
        self.report = report


class CalibrationBreak(UslvError):
    """Forward-induction adjustment undefined: the prior conditional
    generator is structurally missing a transition that the target model
    requires."""

    def __init__(self, message, step=None, transition=None):
        super().__init__(message)
        self.step = step
        self.transition = transition


class Infeasible(UslvError):
    """Constraint targets lie outside the attainable hull."""

    def __init__(self, message, hull_bounds=None):
        super().__init__(message)
        self.hull_bounds = hull_bounds
