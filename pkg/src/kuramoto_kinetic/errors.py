"""Exception hierarchy.

Every failure mode named by an operation contract has its own class so that
callers (and the CLI) can tell a rejected input from a numerical breakdown.
"""


class KineticError(Exception):
    """Base class for all package errors."""


class InvalidDensity(KineticError, ValueError):
    pass


class AsymmetricDensity(InvalidDensity):
    pass


class NonUnitMass(InvalidDensity):
    pass


class UnboundedSupport(InvalidDensity):
    pass


class NegativeDensity(InvalidDensity):
    pass


class EmptyLevelSet(KineticError, ValueError):
    """A requested quantile level is at or above the total fiber mass."""


class EmptyMeasure(KineticError, ValueError):
    pass


class ZeroDensityAtOrigin(KineticError, ValueError):
    pass


class CouplingTooWeak(KineticError, ValueError):
    pass


class UnstableStep(KineticError, RuntimeError):
    pass


class MonotonicityLoss(KineticError, RuntimeError):
    """Two quantiles of the same fiber crossed during time stepping."""


class SupportEscape(KineticError, RuntimeError):
    """Some phase left the open interval (0, 2*pi)."""


class CflViolation(KineticError, ValueError):
    pass


class LatticeMismatch(KineticError, ValueError):
    pass


class UnequalSupport(KineticError, ValueError):
    pass


class MeanNotZero(KineticError, ValueError):
    pass


class RangeViolation(KineticError, ValueError):
    pass


class NonPositiveValues(KineticError, ValueError):
    pass


class PreconditionViolated(KineticError, ValueError):
    """An experiment's theorem hypotheses do not hold for the given config."""
