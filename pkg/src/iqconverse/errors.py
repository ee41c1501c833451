"""Exception hierarchy.

Validation problems derive from :class:`ValueError` so callers (and the CLI)
can separate bad input from numerical trouble.
"""


class IQCError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(IQCError, ValueError):
    pass


class DomainMismatch(DimensionMismatch):
    pass


class NotSquare(DimensionMismatch):
    pass


class InvalidParameter(IQCError, ValueError):
    pass


class ThetaOutOfRange(InvalidParameter):
    pass


class InvalidTarget(InvalidParameter):
    pass


class WeightVanishes(InvalidParameter):
    pass


class WrongInertia(InvalidParameter):
    pass


class NumericalFailure(IQCError, ArithmeticError):
    pass


class SingularResolvent(NumericalFailure):
    pass


class NotInvertible(IQCError, ValueError):
    pass


class SingularPsi4(NotInvertible):
    pass


class AdjointUnrepresentable(IQCError, ValueError):
    pass


class UnstableSystem(IQCError, ValueError):
    pass


class PhaseUnreachable(IQCError, ValueError):
    pass


class NotWellPosed(IQCError):
    pass


class UnstableClosedLoop(IQCError):
    pass


class PlantSatisfiesIqc(IQCError):
    """The plant already satisfies the IQC, so no destabilizer exists."""


class ConditionsFailed(IQCError, ValueError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class VerificationFailed(IQCError):
    def __init__(self, item, report=None):
        super().__init__(f"certificate check failed: {item}")
        self.item = item
        self.report = report
