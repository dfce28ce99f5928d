"""Exception hierarchy."""


class NlsktError(Exception):
    """Base class for all package errors."""


class DomainError(NlsktError, ValueError):
    pass


class DegenerateKernel(NlsktError, ValueError):
    """Kernel support or second moment vanishes at the resolution used."""


class InvalidDelta(NlsktError, ValueError):
    pass


class DegenerateState(NlsktError, ValueError):
    pass


class OutOfRange(NlsktError, ValueError):
    pass


class SolverError(NlsktError, RuntimeError):
    """Time-stepping failure; ``trajectory`` holds the steps completed so far."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class NoConvergence(SolverError):
    pass


class NonContracting(SolverError):
    pass


class LedgerViolation(NlsktError, RuntimeError):
    pass


class UnstableStep(NlsktError, RuntimeError):
    pass


class WindowTooLarge(NlsktError, RuntimeError):
    pass


class ConfigError(NlsktError, ValueError):
    """Invalid run configuration; ``violations`` lists ``(key, message)`` pairs."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(f"{k}: {m}" for k, m in self.violations))
