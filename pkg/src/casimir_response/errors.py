"""Exception hierarchy. Each class carries the CLI exit code for its error class."""


class CasimirError(Exception):
    exit_code = 1


class ScenarioError(CasimirError, ValueError):
    """A scenario failed validation (or could not be parsed)."""

    exit_code = 3


class ScenarioParseError(ScenarioError):
    pass


class MissingVelocityProfile(ScenarioError):
    pass


class ConvergenceError(CasimirError, ArithmeticError):
    """Numerical non-convergence; ``estimate`` holds the achieved error if known."""

    exit_code = 4

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class NoisyTrackError(ConvergenceError):
    pass


class MomentDivergenceError(ConvergenceError):
    pass


class CoverageError(CasimirError, ValueError):
    """A table or cutoff does not cover the region an integral needs."""

    exit_code = 5
