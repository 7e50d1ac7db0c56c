"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class FlatSpotError(Exception):
    """Base class; ``exit_code`` is what the CLI returns for it."""

    exit_code = 1


class ConfigError(FlatSpotError, ValueError):
    exit_code = 2


class UnvalidatedMap(FlatSpotError):
    exit_code = 4


class ValidationRejected(FlatSpotError):
    exit_code = 4

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class PrecisionExhausted(FlatSpotError):
    exit_code = 3


class BudgetExceeded(FlatSpotError):
    exit_code = 3


class FlatSpotDomain(FlatSpotError, ValueError):
    pass


class NonMonotone(FlatSpotError):
    pass


class InsufficientAccuracy(FlatSpotError):
    def __init__(self, message: str, last_certified: int):
        super().__init__(message)
        self.last_certified = last_certified


class OrbitTooShort(FlatSpotError):
    pass


class UndefinedAtLevel(FlatSpotError):
    pass


class NonpositiveScaling(FlatSpotError):
    pass


class SideCaseUndetermined(FlatSpotError):
    pass


class InconclusiveWindow(FlatSpotError):
    pass


class DegenerateQuadruple(FlatSpotError, ValueError):
    pass


class FlatSpotHit(FlatSpotError):
    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


class OrderingViolation(FlatSpotError, ValueError):
    pass


class ChainInvalid(FlatSpotError):
    pass


class InadmissibleSequence(FlatSpotError, ValueError):
    exit_code = 2


class NotFound(FlatSpotError):
    exit_code = 3


class LengthMismatch(FlatSpotError, ValueError):
    pass
