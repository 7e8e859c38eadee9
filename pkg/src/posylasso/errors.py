"""Exception hierarchy shared by the library and the CLI."""


class PosyError(Exception):
    """Base class for all package errors."""


class ConfigError(PosyError, ValueError):
    """Invalid grid, weight scheme, solver setting or CLI usage."""


class DataError(PosyError, ValueError):
    """Malformed or out-of-domain input data."""


class DomainError(DataError):
    """Monomial evaluated outside the positive orthant."""


class NumericalError(PosyError, ArithmeticError):
    """Non-finite intermediate value or violated analytic guarantee."""


class IntegrityError(PosyError, ValueError):
    """A value violates a model invariant (e.g. negative coefficient)."""
