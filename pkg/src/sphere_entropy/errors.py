"""Exception hierarchy shared by all modules."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class PositivityError(DomainError):
    """A coefficient that must be strictly positive is zero."""


class ConvergenceError(RuntimeError):
    """A search or truncation did not reach its target below the iteration cap."""


class DivergenceError(ArithmeticError):
    """A weighted series failed its stabilization test."""


class ResourceError(RuntimeError):
    """A brute-force computation would exceed its configured size cap."""


class ConfigError(ValueError):
    """A configuration document is malformed.

    ``field`` is the dotted path of the offending entry.
    """

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
