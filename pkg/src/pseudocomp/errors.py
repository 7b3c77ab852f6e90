"""Exception types raised across the package."""


class PseudoCompError(Exception):
    """Base class for all errors raised by pseudocomp."""


class DomainError(PseudoCompError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ShapeError(PseudoCompError, ValueError):
    """Array lengths or matrix shapes do not line up."""


class BudgetError(PseudoCompError):
    """Exact enumeration was requested beyond its size budget."""


class MissingLabels(PseudoCompError):
    """A supervised computation was asked for on unlabeled opinions."""


class MissingRng(PseudoCompError):
    """A fair-coin tie occurred but no random stream was supplied."""


class ConfigError(PseudoCompError, ValueError):
    """An experiment or command configuration is invalid."""


class ParseError(PseudoCompError, ValueError):
    """An input file is malformed.

    ``line`` and ``column`` are 1-based and refer to the offending cell when
    known.
    """

    def __init__(self, message, line=None, column=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)
        self.line = line
        self.column = column
