"""Exception hierarchy shared by all modules."""


class SvfkitError(Exception):
    """Base class for toolkit errors."""


class InputError(SvfkitError, ValueError):
    """Malformed or out-of-range input."""


class DomainError(SvfkitError, ValueError):
    """Input outside the mathematical domain of an operation (e.g. singular matrix)."""


class NumericError(SvfkitError, ArithmeticError):
    """A numerical routine failed to converge or lost too much precision."""


class BudgetError(SvfkitError):
    """Enumeration would exceed the configured word budget."""
