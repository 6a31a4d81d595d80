"""Gradient Ricci almost-soliton verification and conformal duality.

A pair (g, f) is an almost soliton where ric + hess f = c g holds for some
smooth coefficient function c; it is a genuine soliton when c is constant
and trivial when f is (an Einstein metric).  The central operation here is
the conformal duality

    (g, f)  ->  (exp(-4 f / (n-2)) g, -f),      n > 2,

which carries almost solitons to almost solitons.  The dual coefficient is
computed two independent ways (the conformal-change assembly and the closed
form through lap f - |grad f|^2) and both are cross-checked against the
coefficient extracted directly from the dualized pair.

Also provided: Hamilton's first integral lap f - |grad f|^2 + 2 c f (constant
exactly for genuine solitons), the steady obstruction -R - |grad f|^2, the
comparison involution (g, f) -> (f^{-2} g, f^{-1}), a pointwise least-squares
fit of the two-coefficient Ricci-Hessian equation ric + alpha hess f = c g,
and the residuals of the profile ODEs that force the duality's conformal
factor and soliton function to be the canonical ones.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import chart as ct
from .errors import (
    DimensionTooSmall,
    DomainError,
    EmptySample,
    NotASoliton,
    ZeroCrossing,
)
from .sampling import DEFAULT_SEED, sample_box

__all__ = [
    "SolitonPair",
    "ResidualReport",
    "ProfilePair",
    "SolitonClass",
    "RicciHessianFit",
    "extract_coefficient",
    "residual_report",
    "classify",
    "dualize",
    "dual_factor_profile",
    "dual_coefficient",
    "hamilton_invariant",
    "steady_obstruction",
    "old_dualize",
    "ricci_hessian_fit",
    "uniqueness_residuals",
    "nonhermitian_coefficient",
    "canonical_profile",
]

# Residual above which a point is not treated as lying on an almost soliton.
SOLITON_RESIDUAL_TOL = 1e-6
# Relative variation below which a sampled coefficient field counts as constant.
COEFF_CONSTANCY_TOL = 1e-6
# |grad f|^2 below which the soliton function counts as constant.
GRADIENT_TRIVIALITY_TOL = 1e-9


@dataclass(frozen=True)
class SolitonPair:
    """A metric chart together with a candidate soliton function."""

    metric: ct.MetricChart
    f: ct.ScalarField
    name: str = ""

    @property
    def dim(self) -> int:
        return self.metric.dim

    def sample(self, count: int = 100, seed: int = DEFAULT_SEED) -> np.ndarray:
        return sample_box(self.metric.domain, count, seed=seed)


@dataclass(frozen=True)
class ResidualReport:
    """Pointwise almost-soliton data over a sample.

    ``coefficients[k]`` is the trace coefficient c(p_k) and ``residuals[k]``
    the g-norm of ric + hess f - c g at p_k.
    """

    points: np.ndarray = field(repr=False)
    coefficients: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)

    def __post_init__(self):
        if len(self.points) == 0:
            raise EmptySample("residual report needs at least one sample point")
        if np.any(self.residuals < 0):
            raise ValueError("residual norms must be nonnegative")

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals))

    @property
    def coefficient_variation(self) -> float:
        """Relative variation (max c - min c) / (1 + max |c|)."""
        c = self.coefficients
        return float((np.max(c) - np.min(c)) / (1.0 + np.max(np.abs(c))))


class SolitonClass(enum.Enum):
    TRIVIAL = "trivial"
    GRADIENT_RICCI_SOLITON = "gradient-Ricci-soliton"
    ALMOST_SOLITON = "almost-soliton"
    NONE = "none"


def extract_coefficient(pair: SolitonPair, p) -> tuple[float, float]:
    """Trace coefficient and equation residual at a point.

    Returns ``(c, r)`` with c = trace_g(ric + hess f) / n and r the g-norm of
    ric + hess f - c g; the pair is an almost soliton at p iff r ~ 0.
    """
    G, _, _ = pair.metric.components(p)
    G_inv = ct.metric_inverse(G)
    tensor = ct.ricci(pair.metric, p).mat + ct.hessian(pair.metric, pair.f, p).mat
    c = float(np.einsum("ij,ij->", G_inv, tensor)) / pair.dim
    return c, ct.tensor_gnorm(G_inv, tensor - c * G)


def residual_report(pair: SolitonPair, points: np.ndarray) -> ResidualReport:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    coeffs = np.empty(len(points))
    residuals = np.empty(len(points))
    for k, p in enumerate(points):
        coeffs[k], residuals[k] = extract_coefficient(pair, p)
    return ResidualReport(points, coeffs, residuals)


def classify(
    pair: SolitonPair,
    sample: np.ndarray | int = 100,
    tol_residual: float = SOLITON_RESIDUAL_TOL,
    tol_coeff: float = COEFF_CONSTANCY_TOL,
    tol_grad: float = GRADIENT_TRIVIALITY_TOL,
    seed: int = DEFAULT_SEED,
) -> SolitonClass:
    """Classify the pair over a point sample.

    almost soliton: max residual < tol_residual; soliton additionally needs
    coefficient variation < tol_coeff; trivial additionally needs
    |grad f|^2 < tol_grad everywhere.
    """
    if isinstance(sample, (int, np.integer)):
        sample = pair.sample(int(sample), seed=seed)
    sample = np.atleast_2d(np.asarray(sample, dtype=float))
    if len(sample) == 0:
        raise EmptySample("classification needs a nonempty sample")
    report = residual_report(pair, sample)
    if report.max_residual >= tol_residual:
        return SolitonClass.NONE
    if report.coefficient_variation >= tol_coeff:
        return SolitonClass.ALMOST_SOLITON
    grad_sq = max(ct.grad_norm_sq(pair.metric, pair.f, p) for p in sample)
    if grad_sq < tol_grad:
        return SolitonClass.TRIVIAL
    return SolitonClass.GRADIENT_RICCI_SOLITON


# -- duality -------------------------------------------------------------------


def dual_factor_profile(n: int) -> ct.SmoothFunction1D:
    """The conformal factor exp(-4 f / (n-2)) of the duality, as a profile in f."""
    rate = -4.0 / (n - 2)
    return ct.SmoothFunction1D(
        lambda f: math.exp(rate * f),
        lambda f: rate * math.exp(rate * f),
        lambda f: rate * rate * math.exp(rate * f),
    )


def dualize(pair: SolitonPair) -> SolitonPair:
    """Conformal dual (exp(-4 f / (n-2)) g, -f).

    The scaled metric's derivative data is assembled analytically from g and
    f (product/chain rule), which keeps the dual pair's residuals at the
    source pair's accuracy.  Applying dualize twice reproduces the original
    components to roundoff.
    """
    n = pair.dim
    if n <= 2:
        raise DimensionTooSmall(f"duality needs dimension n > 2, got n = {n}")
    factor = ct.compose_with_field(dual_factor_profile(n), pair.f, name="dual-factor")
    metric_hat = pair.metric.conformal_scale(factor, name=f"{pair.metric.name}-dual")
    f_hat = ct.apply_univariate(pair.f, lambda v: -v, lambda v: -1.0, lambda v: 0.0, name="-f")
    return SolitonPair(metric_hat, f_hat, name=f"{pair.name}-dual" if pair.name else "dual")


def dual_coefficient(
    pair: SolitonPair,
    p,
    method: str = "direct",
    tol_residual: float = SOLITON_RESIDUAL_TOL,
) -> float:
    """Coefficient of the dual almost soliton at p, by either of two formulas.

    ``direct`` assembles tau^2 (c + beta + delta) from the conformal-change
    coefficients (tau = exp(2 f / (n-2)), beta the g-coefficient of the Ricci
    identity, delta the g-coefficient of the Hessian identity); ``closed``
    uses exp(4 f / (n-2)) (c + 2/(n-2) (lap f - |grad f|^2)).  Both presume
    the source equation holds at p, so points whose residual exceeds
    ``tol_residual`` are refused.
    """
    if pair.dim <= 2:
        raise DimensionTooSmall(f"duality needs dimension n > 2, got n = {pair.dim}")
    c, residual = extract_coefficient(pair, p)
    if residual > tol_residual:
        raise NotASoliton(
            f"almost-soliton residual {residual:.3e} at {np.asarray(p).tolist()} "
            f"exceeds {tol_residual:.1e}; dual coefficient undefined"
        )
    n = pair.dim
    f_val = pair.f(p)
    lap_f = ct.laplacian(pair.metric, pair.f, p)
    grad_sq = ct.grad_norm_sq(pair.metric, pair.f, p)

    if method == "closed":
        return math.exp(4.0 * f_val / (n - 2)) * (c + 2.0 / (n - 2) * (lap_f - grad_sq))
    if method != "direct":
        raise ValueError(f"unknown method {method!r}; expected 'direct' or 'closed'")

    tau = math.exp(2.0 * f_val / (n - 2))
    tau1 = 2.0 / (n - 2) * tau
    tau2 = 4.0 / (n - 2) ** 2 * tau
    lap_tau = tau1 * lap_f + tau2 * grad_sq
    grad_tau_sq = tau1 * tau1 * grad_sq
    beta = lap_tau / tau - (n - 1) * grad_tau_sq / tau**2
    delta = tau1 / tau * grad_sq
    return tau * tau * (c + beta + delta)


def hamilton_invariant(pair: SolitonPair, c: float, p) -> float:
    """k(p) = lap f - |grad f|^2 + 2 c f; constant for genuine solitons."""
    return (
        ct.laplacian(pair.metric, pair.f, p)
        - ct.grad_norm_sq(pair.metric, pair.f, p)
        + 2.0 * c * pair.f(p)
    )


def steady_obstruction(pair: SolitonPair, p) -> float:
    """-R - |grad f|^2; identically zero for a complete steady soliton whose
    dual is again a soliton."""
    return -scalar_curvature_of(pair, p) - ct.grad_norm_sq(pair.metric, pair.f, p)


def scalar_curvature_of(pair: SolitonPair, p) -> float:
    return ct.scalar_curvature(pair.metric, p)


def old_dualize(pair: SolitonPair, sample: int = 64, seed: int = DEFAULT_SEED) -> SolitonPair:
    """Comparison involution (g, f) -> (f^{-2} g, f^{-1}).

    Requires f to be nonvanishing on the domain; sign constancy is checked
    over a dense sample.  No almost-soliton structure is asserted for the
    result beyond what ricci_hessian_fit reports.
    """
    box = pair.metric.domain
    corners = np.array(np.meshgrid(*zip(box.lo, box.hi))).reshape(pair.dim, -1).T
    probe = np.vstack([pair.sample(sample, seed=seed), [0.5 * (box.lo + box.hi)], corners])
    values = np.array([pair.f(p) for p in probe])
    if np.min(np.abs(values)) < 1e-9 or np.min(values) * np.max(values) < 0:
        raise ZeroCrossing("soliton function vanishes (or changes sign) on the domain")
    factor = ct.apply_univariate(
        pair.f, lambda v: v**-2, lambda v: -2.0 * v**-3, lambda v: 6.0 * v**-4, name="f^-2"
    )
    metric_new = pair.metric.conformal_scale(factor, name=f"{pair.metric.name}-olddual")
    f_new = ct.apply_univariate(
        pair.f, lambda v: 1.0 / v, lambda v: -(v**-2), lambda v: 2.0 * v**-3, name="1/f"
    )
    return SolitonPair(metric_new, f_new, name=f"{pair.name}-olddual" if pair.name else "olddual")


@dataclass(frozen=True)
class RicciHessianFit:
    """Pointwise least-squares solve of ric + alpha hess f = c g."""

    alpha: float
    coefficient: float
    residual: float
    alpha_identifiable: bool


def ricci_hessian_fit(pair: SolitonPair, p) -> RicciHessianFit:
    """Fit (alpha, c) at a point; flags alpha as unidentifiable when hess f is
    numerically proportional to g (the fit is then exact but degenerate)."""
    G, _, _ = pair.metric.components(p)
    G_inv = ct.metric_inverse(G)
    ric = ct.ricci(pair.metric, p).mat
    hess = ct.hessian(pair.metric, pair.f, p).mat

    design = np.stack([hess.ravel(), -G.ravel()], axis=1)
    solution, _, _, _ = np.linalg.lstsq(design, -ric.ravel(), rcond=None)
    alpha, coeff = float(solution[0]), float(solution[1])
    residual = ct.tensor_gnorm(G_inv, ric + alpha * hess - coeff * G)

    trace_part = np.einsum("ij,ij->", G_inv, hess) / pair.dim
    deviatoric = ct.tensor_gnorm(G_inv, hess - trace_part * G)
    scale = ct.tensor_gnorm(G_inv, hess) + 1e-30
    identifiable = deviatoric / scale > 1e-8
    return RicciHessianFit(alpha, coeff, residual, identifiable)


# -- profile-level identities ----------------------------------------------------


@dataclass(frozen=True)
class ProfilePair:
    """Candidate conformal factor tau(f) and soliton-function profile k(f)."""

    tau: ct.SmoothFunction1D
    k: ct.SmoothFunction1D


def canonical_profile(n: int) -> ProfilePair:
    """The unique profile pair (up to constants) admitted by the duality."""
    rate = 2.0 / (n - 2)
    tau = ct.SmoothFunction1D(
        lambda f: math.exp(rate * f),
        lambda f: rate * math.exp(rate * f),
        lambda f: rate * rate * math.exp(rate * f),
    )
    k = ct.SmoothFunction1D(lambda f: -f, lambda f: -1.0, lambda f: 0.0)
    return ProfilePair(tau, k)


def uniqueness_residuals(profile: ProfilePair, n: int, f: float) -> tuple[float, float]:
    """Residuals of the two coefficient ODEs a dual profile must satisfy.

    R1 = (n-2) tau'/tau + k' - 1 and R2 = (n-2) tau''/tau + k'' + 2 (tau'/tau) k'
    both vanish identically exactly for tau = exp(2 f / (n-2)), k = -f (up to
    a multiplicative / additive constant respectively).
    """
    tau = profile.tau.value(f)
    if tau <= 0:
        raise DomainError(f"profile tau({f}) = {tau} must be positive")
    tau_ratio1 = profile.tau.deriv(f) / tau
    tau_ratio2 = profile.tau.deriv2(f) / tau
    k1 = profile.k.deriv(f)
    k2 = profile.k.deriv2(f)
    r1 = (n - 2) * tau_ratio1 + k1 - 1.0
    r2 = (n - 2) * tau_ratio2 + k2 + 2.0 * tau_ratio1 * k1
    return r1, r2


def nonhermitian_coefficient(tau: ct.SmoothFunction1D, n: int, f: float) -> float:
    """(n-2) tau''/tau + 2 tau'/tau: the obstruction multiplying df (x) df when a
    conformal image of a Hermitian-Hessian pair is required to stay Hermitian.
    Vanishes for all f iff tau = const * exp(-2 f / (n-2))."""
    tau_val = tau.value(f)
    if tau_val == 0:
        raise DomainError("tau vanishes; coefficient undefined")
    return (n - 2) * tau.deriv2(f) / tau_val + 2.0 * tau.deriv(f) / tau_val
