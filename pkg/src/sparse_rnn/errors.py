"""Shared exception types.

The CLI maps these onto exit codes, so everything user-facing raises one
of them instead of a bare ValueError.
"""


class ShapeError(ValueError):
    """Operands have incompatible shapes."""


class DomainError(ValueError):
    """An argument is outside the mathematical domain of the operation."""


class InputError(ValueError):
    """Malformed input data (bad ids, labels, file contents)."""


class ContractViolation(RuntimeError):
    """An internal precondition was broken, e.g. a stale forward trace."""


class ConfigError(ValueError):
    """Invalid experiment configuration or command-line arguments."""
