"""Exception types shared across the package."""


class WarplabError(Exception):
    """Base class for all package-specific failures."""


class ConfigurationError(WarplabError):
    """Invalid configuration, unsupported space, or malformed input."""


class InvariantViolation(WarplabError):
    """A domain invariant (positivity, admissible parameters) was broken."""


class PreconditionError(WarplabError):
    """An operation was called with arguments outside its contract."""


class SolverError(WarplabError):
    """An eigenvalue solve failed or produced an inconsistent eigenpair."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class DiscretizationFault(WarplabError):
    """A discrete result contradicts an analytically required property."""
