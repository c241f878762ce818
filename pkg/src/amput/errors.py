"""Domain error types shared across the package."""


class AmputError(Exception):
    """Base class for all package errors."""


class InvalidInput(AmputError):
    pass


class BarycentreMismatch(AmputError):
    pass


class ConvexOrderViolated(AmputError):
    def __init__(self, msg, fails_at=None):
        super().__init__(msg)
        self.fails_at = fails_at


class NonConvexCurve(AmputError):
    pass


class NoConvergence(AmputError):
    def __init__(self, msg, at=None):
        super().__init__(msg)
        self.at = at


class DispersionViolated(AmputError):
    pass


class MonotonicityViolated(AmputError):
    pass


class ResidualTooLarge(AmputError):
    def __init__(self, msg, worst_row=None):
        super().__init__(msg)
        self.worst_row = worst_row


class OutOfDomain(AmputError):
    pass


class DegenerateDenominator(AmputError):
    pass


class NoRoot(AmputError):
    pass


class RegionMismatch(AmputError):
    pass


class NotConvex(AmputError):
    pass


class NotDominating(AmputError):
    pass


class SizeCap(AmputError):
    pass


class Infeasible(AmputError):
    pass


class Unbounded(AmputError):
    pass


class NumericalBreakdown(AmputError):
    pass
