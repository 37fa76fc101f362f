"""Exception hierarchy shared by the solver modules."""


class KG2DError(Exception):
    """Base class for all solver errors."""


class DomainError(KG2DError, ValueError):
    """An argument lies outside the domain of the requested quantity."""


class NumericError(KG2DError, ArithmeticError):
    """The ODE integrator could not advance.

    Attributes
    ----------
    radius : float
        Radius at which the step size underflowed.
    """

    def __init__(self, message, radius=None):
        super().__init__(message)
        self.radius = radius


class UndefinedSlopeError(KG2DError):
    """Energy slope requested where the interior log-derivative has a pole."""


class InconsistentStateError(KG2DError):
    """A bound state does not decay outside the cutoff radius."""


class ResolutionError(KG2DError):
    """Root counts disagree between two scan resolutions."""


class ContinuationError(KG2DError):
    """Coupling continuation hit the refinement floor."""


class ThresholdAccuracyError(KG2DError):
    """Threshold phase extrapolation did not converge."""


class RefinementError(KG2DError):
    """Threshold crossings could not be separated by refinement."""


class CriticalityError(KG2DError):
    """Critical threshold case not resolved within the supported derivative order."""


class LedgerError(KG2DError):
    """Coupling-sweep events could not be ordered consistently."""


class ConfigError(KG2DError):
    """Invalid run configuration."""

    def __init__(self, message, field=None, line=None):
        super().__init__(message)
        self.field = field
        self.line = line
