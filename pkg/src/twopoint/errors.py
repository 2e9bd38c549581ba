"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class TwopointError(Exception):
    """Base class for all errors raised by :mod:`twopoint`."""


class InvalidArgument(TwopointError, ValueError):
    pass


class SizeLimitError(InvalidArgument):
    pass


class ParseError(TwopointError, ValueError):
    pass


class MetricAxiomError(InvalidArgument):
    """A distance matrix failed one of the metric axioms.

    ``where`` holds the offending index tuple: ``(i,)`` for a nonzero
    diagonal, ``(i, j)`` for asymmetry, negativity or duplicate points and
    ``(i, j, k)`` for a triangle violation ``d[i][k] > d[i][j] + d[j][k]``.
    """

    def __init__(self, message: str, where: tuple[int, ...]):
        super().__init__(message)
        self.where = where


class DegeneratePairError(InvalidArgument):
    pass


class EmptyTripleError(InvalidArgument):
    pass


class InsufficientDataError(InvalidArgument):
    pass


class InsufficientChainError(InvalidArgument):
    pass


class OracleSizeError(InvalidArgument):
    pass


class RangeError(InvalidArgument):
    pass


class ConfigError(TwopointError, ValueError):
    """Configuration problem; ``field`` is the dotted path, e.g. ``construction.delta``."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
