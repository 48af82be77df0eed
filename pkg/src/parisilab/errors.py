"""Exception hierarchy shared by all modules."""


class ParisiLabError(Exception):
    """Base class for library errors."""


class DomainError(ParisiLabError, ValueError):
    """An argument lies outside the domain of the operation."""


class ValidationError(ParisiLabError, ValueError):
    """An input object violates one of its invariants."""


class ConfigurationError(ParisiLabError, ValueError):
    """Grid, batch or experiment parameters are inconsistent."""


class NumericalError(ParisiLabError, ArithmeticError):
    """A computation produced non-finite values."""
