"""Exception types raised across the package."""


class InterpLabError(Exception):
    """Base class for all package errors."""


class NonFinite(InterpLabError, ValueError):
    pass


class DimMismatch(InterpLabError, ValueError):
    pass


class DimTooSmall(InterpLabError, ValueError):
    pass


class InvalidRegime(InterpLabError, ValueError):
    pass


class RankDeficient(InterpLabError, ValueError):
    pass


class ZeroSignal(InterpLabError, ValueError):
    pass


class EmptyPair(InterpLabError, ValueError):
    pass


class MissingColumn(InterpLabError, KeyError):
    pass


class ConfigError(InterpLabError, ValueError):
    pass


class NotSeparable(InterpLabError, RuntimeError):
    """The max-margin problem has no feasible point (or looks like it)."""

    def __init__(self, message, classes=None):
        super().__init__(message)
        self.classes = list(classes) if classes is not None else []


class Unconverged(InterpLabError, RuntimeError):
    """Iteration budget exhausted; carries the best iterate seen."""

    def __init__(self, message, best=None, gap=float("nan")):
        super().__init__(message)
        self.best = best
        self.gap = gap
