"""Exception types shared across the package.

The CLI maps :class:`ConfigurationError` to exit code 1 and
:class:`ResourceError` to exit code 2.
"""


class ConfigurationError(ValueError):
    """Invalid parameters or configuration."""


class DomainError(ConfigurationError):
    """Argument outside the mathematical domain of a function."""


class ContractViolation(ConfigurationError):
    """Caller broke a documented precondition (e.g. a non-prime passed as a prime)."""


class ResourceError(RuntimeError):
    """Request exceeds sieve capacity or block budget."""
