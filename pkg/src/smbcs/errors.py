"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, CostGuardError -> 3,
NumericGuardError -> 4.
"""


class DomainError(ValueError):
    """An argument violates a documented precondition (bad shape, size, index)."""


class ResolutionError(DomainError):
    """A detector bin width violates the resolution conditions in strict mode."""


class CostGuardError(RuntimeError):
    """A computation was refused because it exceeds a configured cost guard."""


class NumericGuardError(RuntimeError):
    """A numeric consistency assertion failed (probability bounds, route mismatch)."""


class ConfigError(ValueError):
    """An experiment configuration failed validation."""
