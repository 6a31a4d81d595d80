"""Completeness of the conformal dual along potential-gradient curves.

For the profile family the dual metric's arc length along gradient-flow
curves reduces to the single integral

    length = integral  exp(-2 f / (n-2)) / sqrt(Q(f))  df,      n = 2m,

over the range of the potential, so completeness is decided by endpoint
analysis of that integrand:

  * Q(a) = 0 with Q'(a) != 0 (simple zero): the integrand behaves like
    (f - a)^{-1/2}, the length is finite, and the metric extends smoothly
    over the level set -- a "smooth cap".
  * Q(a) = Q'(a) = 0 (double or higher zero): the integrand behaves like
    (f - a)^p with p <= -1, the length diverges -- an "infinite end".
  * sup f = +inf: substituting u = 1 / f_c turns the tail into an integral
    over (0, u1]; the exponential factor makes it converge for m > 1 when
    the profile grows exponentially, so that end has finite length and the
    dual is incomplete there.

Every analytic classification is corroborated numerically: a log-log
exponent fit near the endpoint and a truncation-ladder convergence test of
the improper integral must agree with the derivative-based class.
"""

from __future__ import annotations

import enum
import math
import warnings
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import chart as ct
from .errors import (
    DomainError,
    DomainExit,
    NonpositiveQ,
    OscillationDetected,
    ToleranceAmbiguity,
)
from .skrp import CalabiChart, QProfile, as_q_profile, q_domain

__all__ = [
    "EndpointClass",
    "OverallVerdict",
    "IntegralResult",
    "ExponentFit",
    "EndpointAnalysis",
    "CompletenessVerdict",
    "arc_integrand",
    "improper_integral",
    "exponent_fit",
    "classify_endpoint",
    "infinite_range_test",
    "gradient_flow_length_crosscheck",
    "completeness_verdict",
    "u_substituted_integral",
    "tail_log_integrand",
    "tail_log_asymptote",
]

# Relative zero tolerance for endpoint values of Q (scaled by the Q range).
ENDPOINT_ZERO_RTOL = 1e-9
# Truncation ladder epsilon exponents for divergence detection.
LADDER_EXPONENTS = range(2, 11)


def _quad(fn, a, b, **kw) -> float:
    """Adaptive quadrature with roundoff chatter silenced; near-singular
    pieces are expected here and handled by the callers' substitutions."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(fn, a, b, **kw)
    return val


class EndpointClass(enum.Enum):
    SMOOTH_CAP = "SmoothCap"
    INFINITE_END = "InfiniteEnd"
    INFINITE_RANGE_CONVERGENT = "InfiniteRangeConvergent"
    INFINITE_RANGE_DIVERGENT = "InfiniteRangeDivergent"
    INTERIOR = "Interior"


class OverallVerdict(enum.Enum):
    COMPLETE = "complete"
    INCOMPLETE = "incomplete"
    COMPLETE_COMPACT_EXTENSION = "complete-compact-extension"
    INCONCLUSIVE_AT_END = "inconclusive-at-end"


@dataclass(frozen=True)
class IntegralResult:
    """Outcome of an improper-integral evaluation."""

    converged: bool
    value: float | None = None
    rate: str | None = None
    increments: tuple[float, ...] = field(default=(), repr=False)

    @property
    def diverges(self) -> bool:
        return not self.converged


@dataclass(frozen=True)
class ExponentFit:
    """Least-squares power-law fit of an integrand near an endpoint."""

    exponent: float
    stderr: float
    residual: float
    log_coefficient: float = 0.0

    @property
    def confidence(self) -> tuple[float, float]:
        half = 1.96 * self.stderr
        return (self.exponent - half, self.exponent + half)


@dataclass(frozen=True)
class EndpointAnalysis:
    endpoint: float
    side: str  # "inf" or "sup"
    cls: EndpointClass
    integral: IntegralResult | None = None
    exponent: ExponentFit | None = None
    evidence: dict = field(default_factory=dict, repr=False)


@dataclass(frozen=True)
class CompletenessVerdict:
    lower: EndpointAnalysis
    upper: EndpointAnalysis
    overall: OverallVerdict


# -- integrand -------------------------------------------------------------------


def arc_integrand(profile_or_params, f: float) -> float:
    """Dual arc-length density exp(-2 f / (n-2)) / sqrt(Q(f)), n = 2m."""
    profile = as_q_profile(profile_or_params)
    q = profile.q(f)
    if q <= 0:
        raise NonpositiveQ(f"Q({f}) = {q} must be positive for the arc integrand")
    return math.exp(-f / (profile.m - 1)) / math.sqrt(q)


# -- improper integrals ------------------------------------------------------------


def _ladder(integrand: Callable[[float], float], a: float, span: float) -> tuple[bool, str | None, list[float]]:
    """Truncation ladder: decide divergence toward the endpoint ``a``.

    The increments I(a + eps_{k+1}) - I(a + eps_k) of the truncated integrals
    are computed directly as the decade-segment integrals over
    [a + eps_{k+1}, a + eps_k], each of which is a smooth positive quadrature.
    Divergence is declared when the increments are non-decreasing (constant
    for a log singularity, growing for powers below -1); a decreasing tail
    means the improper integral converges.
    """
    exps = list(LADDER_EXPONENTS)
    eps = [span * 10.0 ** (-k) for k in exps]
    increments = []
    for hi_e, lo_e in zip(eps[:-1], eps[1:]):
        seg = _quad(integrand, a + lo_e, a + hi_e, epsabs=1e-300, epsrel=1e-10, limit=200)
        increments.append(seg)
    scale = max(abs(v) for v in increments) + 1e-300
    if any(seg < -1e-12 * scale for seg in increments):
        raise OscillationDetected("a truncation segment is negative; integrand is not positive")
    tail = increments[-4:]
    nondecreasing = all(b >= a_ * (1.0 - 1e-3) for a_, b in zip(tail[:-1], tail[1:]))
    significant = tail[-1] > 1e-13 * scale
    if nondecreasing and significant:
        ratios = [b / a_ for a_, b in zip(tail[:-1], tail[1:]) if a_ > 0]
        ratio = float(np.median(ratios)) if ratios else 1.0
        if ratio < 1.25:
            rate = "log"
        else:
            rate = f"power p~{-1.0 - math.log10(ratio):.2f}"
        return True, rate, increments
    return False, None, increments


def improper_integral(
    integrand: Callable[[float], float],
    a: float,
    b: float,
    singular_end: str = "lower",
) -> IntegralResult:
    """Evaluate an integral with a possible endpoint singularity at ``a``
    (or at ``b`` with ``singular_end='upper'``).

    Divergence is decided first by the truncation ladder; convergent
    integrals are evaluated with an endpoint power substitution chosen from
    a quick exponent fit (t^2 = f - a for inverse-square-root behaviour),
    which removes the singularity before adaptive quadrature.
    """
    if not a < b:
        raise DomainError(f"integration bounds must satisfy a < b, got ({a}, {b})")
    if singular_end not in ("lower", "upper"):
        raise ValueError("singular_end must be 'lower' or 'upper'")
    span = b - a
    sing = a if singular_end == "lower" else b
    direction = 1.0 if singular_end == "lower" else -1.0

    def at_offset(off: float) -> float:
        return integrand(sing + direction * off)

    diverges, rate, increments = _ladder(at_offset, 0.0, span)
    if diverges:
        return IntegralResult(False, None, rate, tuple(increments))

    fit = exponent_fit(at_offset, 0.0, lo=1e-8 * span, hi=1e-3 * span)
    p_hat = min(fit.exponent, 0.0)
    if p_hat <= -1.0:
        p_hat = -0.999  # ladder said convergent; keep the substitution finite
    k = max(2, math.ceil(1.01 / (1.0 + p_hat)))

    def substituted(u: float) -> float:
        # quadpack evaluates endpoints; the u -> 0 limit is 0 by choice of k,
        # and offsets that round onto the singular endpoint count as 0 too.
        point = sing + direction * u**k
        if point == sing:
            return 0.0
        return k * u ** (k - 1) * integrand(point)

    value = _quad(substituted, 0.0, span ** (1.0 / k), epsabs=1e-12, epsrel=1e-11, limit=400)
    if sing != 0.0:
        # Offsets below the float spacing at the endpoint round onto it and
        # were counted as 0 above; add their mass back from the power model.
        sliver = abs(np.nextafter(sing, sing + direction) - sing)
        value += math.exp(fit.log_coefficient) * sliver ** (1.0 + p_hat) / (1.0 + p_hat)
    return IntegralResult(True, float(value), None, tuple(increments))


def exponent_fit(
    integrand: Callable[[float], float],
    a: float,
    lo: float = 1e-8,
    hi: float = 1e-3,
    points: int = 25,
) -> ExponentFit:
    """Fit integrand ~ C (f - a)^p on a geometric grid of offsets.

    Returns the least-squares slope of log integrand against log (f - a)
    with its standard error and the rms fit residual.
    """
    offsets = np.geomspace(lo, hi, points)
    logs = np.log(offsets)
    vals = np.log([integrand(a + d) for d in offsets])
    design = np.stack([logs, np.ones_like(logs)], axis=1)
    coef, res, _, _ = np.linalg.lstsq(design, vals, rcond=None)
    fitted = design @ coef
    rms = float(np.sqrt(np.mean((vals - fitted) ** 2)))
    dof = max(points - 2, 1)
    var = float(np.sum((vals - fitted) ** 2)) / dof
    sxx = float(np.sum((logs - logs.mean()) ** 2))
    stderr = math.sqrt(var / sxx)
    return ExponentFit(float(coef[0]), stderr, rms, float(coef[1]))


# -- endpoint classification -------------------------------------------------------


def _q_scale(profile: QProfile, a: float) -> float:
    """Representative |Q| magnitude near an endpoint.

    The scale is sampled over the part of the interval within a few units of
    the endpoint; using the whole interval would let an exponentially
    growing tail inflate the zero tolerance past genuinely nonzero values.
    """
    lo, hi = profile.interval
    lo = max(lo, a - 5.0)
    hi = min(hi, a + 5.0)
    xs = np.linspace(lo + 1e-6 * (hi - lo), hi - 1e-6 * (hi - lo), 64)
    return float(max(max(abs(profile.q(x)) for x in xs), 1e-30))


def classify_endpoint(profile_or_params, a: float, side: str | None = None) -> EndpointAnalysis:
    """Classify a finite endpoint of a Q-positive interval.

    Decides from the analytic values Q(a), Q'(a) against a zero tolerance
    scaled to the Q range, then corroborates with an exponent fit of the arc
    integrand and a truncation-ladder integral toward the endpoint.  An
    endpoint whose derivative magnitude sits within a factor 10 of the
    tolerance is ambiguous and surfaced as an error rather than guessed.
    """
    profile = as_q_profile(profile_or_params)
    if not math.isfinite(a):
        raise DomainError("classify_endpoint needs a finite endpoint; use infinite_range_test")
    lo, hi = profile.interval
    if side is None:
        side = "inf" if abs(a - lo) <= abs(a - (hi if math.isfinite(hi) else lo)) else "sup"

    tol = ENDPOINT_ZERO_RTOL * _q_scale(profile, a)
    q_a = profile.q(a)
    dq_a = profile.dq(a)
    if q_a < -tol:
        raise NonpositiveQ(f"Q({a}) = {q_a} is negative; not an endpoint of a Q-positive interval")

    width = (hi - lo) if (math.isfinite(hi) and math.isfinite(lo)) else 1.0
    delta = min(1.0, 0.2 * width)
    if side == "inf":
        integrand = lambda f: arc_integrand(profile, f)
        fit = exponent_fit(integrand, a, lo=1e-8 * delta, hi=1e-3 * delta)
        integral = improper_integral(integrand, a, a + delta, singular_end="lower")
    else:
        integrand = lambda f: arc_integrand(profile, f)
        mirrored = lambda f: integrand(2 * a - f)
        fit = exponent_fit(mirrored, a, lo=1e-8 * delta, hi=1e-3 * delta)
        integral = improper_integral(integrand, a - delta, a, singular_end="upper")

    evidence = {"q": q_a, "dq": dq_a, "tol": tol}
    if abs(q_a) >= tol:
        cls = EndpointClass.INTERIOR
    else:
        if tol / 10.0 < abs(dq_a) < tol * 10.0:
            raise ToleranceAmbiguity(
                f"|Q'({a})| = {abs(dq_a):.3e} is within a factor 10 of the zero tolerance {tol:.3e}"
            )
        if abs(dq_a) >= tol:
            cls = EndpointClass.SMOOTH_CAP
            if integral.diverges:
                raise ToleranceAmbiguity(
                    f"simple zero at {a} but the truncated integrals do not converge"
                )
        else:
            cls = EndpointClass.INFINITE_END
            if integral.converged:
                raise ToleranceAmbiguity(
                    f"higher-order zero at {a} but the truncated integrals converge"
                )
    return EndpointAnalysis(a, side, cls, integral, fit, evidence)


# -- infinite range ---------------------------------------------------------------


def tail_log_integrand(params, u: float) -> float:
    """log of the u-substituted tail integrand, computed overflow-safely.

    With u = 1 / f_c the tail integral becomes
    integral_0^{u1} exp(-f / (m-1)) Q(f)^{-1/2} u^{-2} du at f = c + 1/u.
    """
    from .skrp import SkrpParams, phi_closed, q_profile  # local import to avoid cycle

    if not isinstance(params, SkrpParams):
        raise DomainError("tail substitution needs closed-form profile parameters")
    if u <= 0:
        raise DomainError("substitution variable u must be positive")
    m = params.m
    x = 1.0 / u
    f = params.c + x
    if x < 600.0:
        q = q_profile(params, f)
        if q <= 0:
            raise NonpositiveQ(f"Q({f}) = {q} on the tail")
        log_q = math.log(q)
    else:
        if params.B > 0:
            # phi ~ B e^x x^{-m}; the polynomial and constant parts are
            # exponentially negligible here.
            log_phi = x - m * math.log(x) + math.log(params.B)
        elif params.B == 0.0:
            phi = phi_closed(params, f)[0]
            if phi <= 0:
                raise NonpositiveQ(f"phi({f}) = {phi} on the tail")
            log_phi = math.log(phi)
        else:
            raise NonpositiveQ("B < 0 makes the profile negative on the far tail")
        log_q = math.log(2.0) + math.log(x) + log_phi
    return -f / (m - 1) - 0.5 * log_q + 2.0 * math.log(x)


def tail_log_asymptote(params, u: float) -> float:
    """log of exp((-1/(m-1) - 1/2) / u) * u^{-((m-1)/2 + 2)}."""
    m = params.m
    return (-1.0 / (m - 1) - 0.5) / u - ((m - 1) / 2.0 + 2.0) * math.log(u)


def infinite_range_test(params_or_profile, f_start: float | None = None) -> EndpointAnalysis:
    """Analyze an interval with sup f = +inf through the u = 1/f_c substitution.

    The tail integral converges (finite dual length, hence incompleteness at
    that end) exactly when the truncation ladder of the u-integral settles;
    when the exponential profile constant B is nonzero the measured
    integrand is additionally compared against its closed-form asymptote,
    whose log-ratio must approach a constant.
    """
    profile = as_q_profile(params_or_profile)
    params = profile.params
    if params is None:
        raise DomainError("infinite_range_test needs closed-form profile parameters")
    lo, hi = profile.interval
    if math.isfinite(hi):
        raise DomainError(f"interval {profile.interval} does not reach +inf")
    if f_start is None:
        f_start = max(lo + 1.0, params.c + 1.0) if math.isfinite(lo) else params.c + 1.0
    u1 = 1.0 / (f_start - params.c)
    if u1 <= 0:
        raise DomainError("f_start must exceed the shift c")

    def integrand(u: float) -> float:
        log_val = tail_log_integrand(params, u)
        return math.exp(log_val) if log_val > -745.0 else 0.0

    diverges, rate, increments = _ladder(integrand, 0.0, u1)
    evidence: dict = {"u1": u1}
    if params.B != 0.0:
        us = np.geomspace(0.5 * u1, max(2e-3, 0.01 * u1), 12)
        log_ratios = [tail_log_integrand(params, u) - tail_log_asymptote(params, u) for u in us]
        evidence["asymptote_log_ratio"] = log_ratios
        evidence["asymptote_ratio_limit"] = math.exp(log_ratios[-1])

    if diverges:
        return EndpointAnalysis(math.inf, "sup", EndpointClass.INFINITE_RANGE_DIVERGENT, IntegralResult(False, None, rate, tuple(increments)), None, evidence)
    value = _quad(integrand, 0.0, u1, epsabs=1e-13, epsrel=1e-12, limit=400)
    return EndpointAnalysis(
        math.inf,
        "sup",
        EndpointClass.INFINITE_RANGE_CONVERGENT,
        IntegralResult(True, float(value), None, tuple(increments)),
        None,
        evidence,
    )


def _infinite_lower_test(profile: QProfile, f_end: float) -> EndpointAnalysis:
    """Generic ladder test toward f -> -inf (the conformal factor grows)."""

    def integrand(f: float) -> float:
        return arc_integrand(profile, f)

    values = []
    for k in range(0, 7):
        lo = f_end - 2.0**k
        values.append(_quad(integrand, lo, f_end, epsabs=1e-12, epsrel=1e-11, limit=400))
    increments = list(np.diff(values))
    diverges = all(b >= a * (1.0 - 1e-3) for a, b in zip(increments[-3:-1], increments[-2:])) and increments[-1] > 0
    cls = EndpointClass.INFINITE_RANGE_DIVERGENT if diverges else EndpointClass.INFINITE_RANGE_CONVERGENT
    result = IntegralResult(not diverges, None if diverges else values[-1], "exp" if diverges else None, tuple(increments))
    return EndpointAnalysis(-math.inf, "inf", cls, result, None, {})


# -- whole-interval verdict ---------------------------------------------------------


def completeness_verdict(params_or_profile, interval_index: int = 0) -> CompletenessVerdict:
    """Combine the endpoint analyses of one Q-positive interval.

    Complete when every end has infinite length (higher-order zero or a
    divergent tail) or is a smooth cap over which the metric extends; the
    all-caps case is flagged as the compact extension.  A finite endpoint
    with Q > 0 is a chart boundary the case analysis does not cover, so the
    verdict is inconclusive rather than guessed.
    """
    profile = as_q_profile(params_or_profile)
    if profile.params is not None:
        intervals = q_domain(profile.params)
        if not intervals:
            raise NonpositiveQ("profile has no Q-positive interval")
        lo, hi = intervals[min(interval_index, len(intervals) - 1)]
        profile = QProfile(profile.q, profile.dq, (lo, hi), profile.m, profile.a, profile.c, profile.params)
    lo, hi = profile.interval

    if math.isfinite(lo):
        lower = classify_endpoint(profile, lo, side="inf")
    else:
        anchor = hi - 1.0 if math.isfinite(hi) else profile.c
        lower = _infinite_lower_test(profile, anchor)

    if math.isfinite(hi):
        upper = classify_endpoint(profile, hi, side="sup")
    else:
        upper = infinite_range_test(profile)

    classes = (lower.cls, upper.cls)
    if EndpointClass.INTERIOR in classes:
        overall = OverallVerdict.INCONCLUSIVE_AT_END
    elif EndpointClass.INFINITE_RANGE_CONVERGENT in classes:
        overall = OverallVerdict.INCOMPLETE
    elif classes == (EndpointClass.SMOOTH_CAP, EndpointClass.SMOOTH_CAP):
        overall = OverallVerdict.COMPLETE_COMPACT_EXTENSION
    else:
        overall = OverallVerdict.COMPLETE
    return CompletenessVerdict(lower, upper, overall)


# -- cross-checks --------------------------------------------------------------------


def u_substituted_integral(integrand: Callable[[float], float], f1: float, f2: float, c: float = 0.0) -> float:
    """Evaluate integral_{f1}^{f2} I(f) df through the substitution u = 1/(f - c).

    Used as an identity check of the tail transformation on smooth ranges.
    """
    if not c < f1 < f2:
        raise DomainError("substitution needs c < f1 < f2")
    u_lo, u_hi = 1.0 / (f2 - c), 1.0 / (f1 - c)
    return float(_quad(lambda u: integrand(c + 1.0 / u) / (u * u), u_lo, u_hi, epsabs=1e-13, epsrel=1e-12, limit=400))


def gradient_flow_length_crosscheck(chart: CalabiChart, f1: float, f2: float) -> float:
    """Dual-metric length of the potential-gradient curve between two levels.

    Integrates  x'(f) = grad f / |grad f|^2  inside the 4-dimensional chart,
    accumulating the conformal-dual speed; independent of the 1-dimensional
    profile reduction, which it is checked against.  The length is symmetric
    in (f1, f2); a zero-length interval returns 0.
    """
    if f1 == f2:
        return 0.0
    lo, hi = (f1, f2) if f1 < f2 else (f2, f1)
    metric, f_field = chart.metric, chart.f_field
    n = 2 * chart.params.m
    rate = -4.0 / (n - 2)
    box = chart.domain

    start = _point_at_level(chart, lo)

    def rhs(f, y):
        x = y[:4]
        if not box.contains(x):
            raise DomainExit(f"flow left the chart domain at f = {f}")
        G, _, _ = metric.components(x)
        G_inv = ct.metric_inverse(G)
        _, df, _ = f_field.evaluate(x)
        grad = G_inv @ df
        vel = grad / float(df @ grad)
        speed_sq = math.exp(rate * f) * float(vel @ G @ vel)
        return np.append(vel, math.sqrt(speed_sq))

    try:
        sol = integrate.solve_ivp(
            rhs, (lo, hi), np.append(start, 0.0), method="DOP853", rtol=1e-10, atol=1e-12
        )
    except DomainExit:
        raise
    if not sol.success:
        raise DomainExit(f"flow integration failed: {sol.message}")
    return float(sol.y[4, -1])


def _point_at_level(chart: CalabiChart, f_level: float) -> np.ndarray:
    """A chart point on the given potential level (fiber axis over z = 0)."""
    try:
        ell = chart.ell.ell(f_level)
    except DomainError as exc:
        raise DomainExit(f"level f = {f_level} is outside the chart's potential window") from exc
    candidate = np.array([0.0, 0.0, ell, 0.0])
    if not chart.domain.contains(candidate):
        raise DomainExit(
            f"level f = {f_level} (fiber norm {ell:.4g}) is outside the chart window {chart.domain}"
        )
    return candidate
