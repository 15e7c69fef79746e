"""Exception hierarchy.

Every numerical failure derives from :class:`NumericalFailure` so callers (the
CLI in particular) can tell a usage problem from a solver that gave up.
"""


class MerodynError(Exception):
    """Base class for all errors raised by this package."""


class ParameterSingularity(MerodynError, ValueError):
    """The parameter is a puncture of the slice."""


class FamilyHasNoPoles(MerodynError, ValueError):
    """The operation needs poles but the family is entire."""


class BadSeed(MerodynError, ValueError):
    pass


class UnknownFamily(MerodynError, KeyError):
    pass


class NumericalFailure(MerodynError, ArithmeticError):
    pass


class NoConvergence(NumericalFailure):
    pass


class PeriodCollapse(NumericalFailure):
    """Refined cycle points coincide; the true period divides the requested one."""

    def __init__(self, msg, period):
        super().__init__(msg)
        self.period = period


class NotAttracting(NumericalFailure):
    pass


class OrbitThroughPole(NumericalFailure):
    """An intermediate iterate is a pole, so the requested order is too high."""

    def __init__(self, msg, order):
        super().__init__(msg)
        self.order = order


class NotRepelling(NumericalFailure):
    pass


class SingularPoint(NumericalFailure):
    """Derivative vanishes (critical point) or is not finite (pole)."""


class Stalled(NumericalFailure):
    pass


class LeftComponent(NumericalFailure):
    pass


class Inconclusive(NumericalFailure):
    pass
