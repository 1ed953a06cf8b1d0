"""Exception hierarchy.

Each class maps to one exit status of the command-line front-end.
"""


class FreesubError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ValidationError(FreesubError, ValueError):
    """Malformed input: bad schema, inconsistent trace data, unknown names."""

    exit_code = 2


class DomainError(FreesubError):
    """Input is well formed but outside what the calculus can answer."""

    exit_code = 3


class ArithmeticDomainError(DomainError, ArithmeticError):
    """Undefined arithmetic such as inf - inf, 0 * inf or division by zero."""


class ValidityError(DomainError):
    """A top-level free product violates the bound excess > 1 - k."""


class ConvergenceError(FreesubError):
    """An iterative numerical routine did not reach its tolerance."""

    exit_code = 4
