"""Exception hierarchy shared by all soliton-lab modules."""


class SolitonLabError(Exception):
    """Base class for all errors raised by this package."""


class SingularMetric(SolitonLabError):
    """Metric matrix is not positive definite at the evaluation point."""


class DegenerateConformalFactor(SolitonLabError):
    """Conformal factor vanishes (or nearly vanishes) at the evaluation point."""


class DimensionTooSmall(SolitonLabError):
    """Operation requires chart dimension n > 2."""


class NotASoliton(SolitonLabError):
    """Almost-soliton residual exceeds tolerance where a soliton is required."""


class ZeroCrossing(SolitonLabError):
    """A function required to be nonvanishing changes sign or vanishes."""


class EmptySample(SolitonLabError):
    """A sample of points was required but none were supplied."""


class DomainError(SolitonLabError):
    """Input lies outside the valid domain of a field or profile."""


class PoleError(SolitonLabError):
    """Profile evaluated at (or too close to) a pole of its closed form."""


class IntegrationFailure(SolitonLabError):
    """Numerical ODE integration failed (step-size underflow, stiff blowup)."""


class DomainSplit(SolitonLabError):
    """Quadrature interval crosses a zero of the positivity profile."""


class CalibrationFailure(SolitonLabError):
    """No candidate in the constant-calibration sweep met its tolerance."""


class NonpositiveQ(SolitonLabError):
    """Gradient-norm profile Q is nonpositive where positivity is required."""


class OscillationDetected(SolitonLabError):
    """Truncated integrals oscillate; divergence test is inapplicable."""


class ToleranceAmbiguity(SolitonLabError):
    """Endpoint derivative magnitude is too close to the zero tolerance to
    classify reliably; surfaced instead of silently resolved."""


class DomainExit(SolitonLabError):
    """A flow curve left the chart domain before integration finished."""


class UnknownFixture(SolitonLabError):
    """Requested fixture name is not registered."""
