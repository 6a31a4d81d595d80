"""Coordinate-chart differential geometry.

Everything lives on a single chart: a :class:`MetricChart` supplies the
metric components together with first and second coordinate derivatives
(exact, via the jet engine), and a :class:`ScalarField` supplies a function
value with gradient and Hessian-of-coordinates.  On top of these the module
computes Christoffel symbols, Ricci curvature, scalar curvature, metric
Hessians/gradients/Laplacians, and runs the dual-path consistency checks for
the conformal-change identities

    hess(f; g/tau^2) = hess(f; g) + tau^{-1} [2 dtau (.) df - g(grad tau, grad f) g]

and

    ric(g/tau^2) = ric(g) + (n-2) tau^{-1} hess(tau)
                   + [tau^{-1} lap(tau) - (n-1) tau^{-2} |grad tau|^2] g,

with the variant of the Ricci identity in which tau is a function of f and
the Hessian of tau is expanded through tau', tau''.

Sign conventions (validated by the constant-curvature oracles in the test
suite): the unit round sphere has ric = (n-1) g, and lap f = trace_g hess f,
so lap(|x|^2 / 2) = n on flat space.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .errors import DegenerateConformalFactor, DomainError, SingularMetric
from .sampling import Box

__all__ = [
    "Point",
    "as_point",
    "ScalarField",
    "SmoothFunction1D",
    "compose_with_field",
    "apply_univariate",
    "SymmetricForm",
    "MetricChart",
    "christoffel",
    "christoffel_with_derivative",
    "ricci",
    "scalar_curvature",
    "hessian",
    "gradient",
    "grad_norm_sq",
    "laplacian",
    "laplacian_divergence_form",
    "tensor_gnorm",
    "metric_inverse",
    "conformal_hessian_check",
    "conformal_ricci_check",
]

# A chart point is a plain float vector; ops validate length/finiteness/domain.
Point = np.ndarray


def as_point(coords: Sequence[float] | np.ndarray, dim: int | None = None) -> np.ndarray:
    p = np.asarray(coords, dtype=float)
    if p.ndim != 1:
        raise DomainError(f"point must be a flat coordinate vector, got shape {p.shape}")
    if dim is not None and p.shape[0] != dim:
        raise DomainError(f"point has {p.shape[0]} coordinates, chart expects {dim}")
    if not np.all(np.isfinite(p)):
        raise DomainError("point has non-finite coordinates")
    return p


@dataclass(frozen=True)
class SmoothFunction1D:
    """A smooth function of one real variable with two derivatives attached."""

    value: Callable[[float], float]
    deriv: Callable[[float], float]
    deriv2: Callable[[float], float]

    def __call__(self, x: float) -> float:
        return self.value(x)

    def jet(self, x: ad.Jet) -> ad.Jet:
        return ad.lift_univariate(x, self.value(x.val), self.deriv(x.val), self.deriv2(x.val))


class ScalarField:
    """Smooth real function on a chart, evaluable with derivatives to order 2.

    The evaluator is a jet function: it receives the coordinate jets of a
    point and returns a :class:`~soliton_lab.autodiff.Jet` (or a plain float
    for constants).  Evaluation is pure, so fields are safe for concurrent
    read-only use.
    """

    def __init__(self, fn: Callable, dim: int, name: str = ""):
        self._fn = fn
        self.dim = dim
        self.name = name

    def evaluate(self, p) -> tuple[float, np.ndarray, np.ndarray]:
        """Return (value, gradient, coordinate Hessian) at ``p``."""
        p = as_point(p, self.dim)
        out = self._fn(ad.seed(p))
        if isinstance(out, ad.Jet):
            return out.val, out.grad, out.hess
        return float(out), np.zeros(self.dim), np.zeros((self.dim, self.dim))

    def __call__(self, p) -> float:
        return self.evaluate(p)[0]

    @staticmethod
    def constant(value: float, dim: int, name: str = "const") -> "ScalarField":
        return ScalarField(lambda jets: float(value), dim, name)

    @staticmethod
    def coordinate(index: int, dim: int) -> "ScalarField":
        return ScalarField(lambda jets: jets[index], dim, f"x{index}")


class FieldOfField(ScalarField):
    """tau = H(f) for a 1-d profile H and a base field f.

    Keeping the profile accessible lets the conformal Ricci check expand the
    Hessian of tau through H', H''.
    """

    def __init__(self, profile: SmoothFunction1D, base: ScalarField, name: str = ""):
        super().__init__(lambda jets: profile.jet(_as_jet(base._fn(jets), len(jets))), base.dim, name)
        self.profile = profile
        self.base = base


def compose_with_field(profile: SmoothFunction1D, base: ScalarField, name: str = "") -> FieldOfField:
    return FieldOfField(profile, base, name)


def apply_univariate(base: ScalarField, value, deriv, deriv2, name: str = "") -> ScalarField:
    """New field h(f) from pointwise callables (h, h', h'') of the base value."""

    def fn(jets):
        f = _as_jet(base._fn(jets), len(jets))
        return ad.lift_univariate(f, value(f.val), deriv(f.val), deriv2(f.val))

    return ScalarField(fn, base.dim, name)


def _as_jet(x, nvars: int) -> ad.Jet:
    if isinstance(x, ad.Jet):
        return x
    return ad.constant(float(x), nvars)


@dataclass(frozen=True)
class SymmetricForm:
    """A symmetric bilinear form at a point (Ricci, Hessian, df (.) dtau, ...)."""

    mat: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.mat, dtype=float)
        skew = np.max(np.abs(m - m.T))
        scale = np.max(np.abs(m))
        if skew > 1e-12 * max(1.0, scale):
            raise ValueError(f"form is not symmetric: max |A - A^T| = {skew:.3e}")
        object.__setattr__(self, "mat", 0.5 * (m + m.T))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.array(self.mat, dtype=dtype)


class MetricChart:
    """Riemannian metric on a coordinate box with exact derivatives to order 2.

    Parameters
    ----------
    evaluator : callable
        Maps a point to ``(G, dG, d2G)`` where ``G[i, j] = g_ij``,
        ``dG[k, i, j] = d_k g_ij`` and ``d2G[k, l, i, j] = d_k d_l g_ij``.
    dim : int
        Chart dimension (n >= 2).
    domain : Box
        Coordinate box on which the components are valid.
    """

    def __init__(self, evaluator, dim: int, domain: Box, name: str = ""):
        if dim < 2:
            raise ValueError("metric charts need dimension n >= 2")
        if domain.dim != dim:
            raise ValueError("domain box dimension does not match chart dimension")
        self._evaluator = evaluator
        self.dim = dim
        self.domain = domain
        self.name = name

    # -- constructors --------------------------------------------------------

    @staticmethod
    def from_jets(component_fn, dim: int, domain: Box, name: str = "") -> "MetricChart":
        """Metric whose components are given as a jet function.

        ``component_fn`` receives the coordinate jets and returns an n x n
        nested sequence of jets/floats (only the upper triangle is read).
        """

        def evaluator(p: np.ndarray):
            jets = ad.seed(p)
            raw = component_fn(jets)
            n = dim
            G = np.empty((n, n))
            dG = np.empty((n, n, n))
            d2G = np.empty((n, n, n, n))
            for i in range(n):
                for j in range(i, n):
                    entry = raw[i][j]
                    if isinstance(entry, ad.Jet):
                        v, g, h = entry.val, entry.grad, entry.hess
                    else:
                        v, g, h = float(entry), np.zeros(n), np.zeros((n, n))
                    G[i, j] = G[j, i] = v
                    dG[:, i, j] = dG[:, j, i] = g
                    d2G[:, :, i, j] = d2G[:, :, j, i] = h
            return G, dG, d2G

        return MetricChart(evaluator, dim, domain, name)

    @staticmethod
    def euclidean(dim: int, domain: Box | None = None, name: str = "euclidean") -> "MetricChart":
        domain = domain or Box([-1.0] * dim, [1.0] * dim)

        def evaluator(p: np.ndarray):
            return np.eye(dim), np.zeros((dim, dim, dim)), np.zeros((dim, dim, dim, dim))

        return MetricChart(evaluator, dim, domain, name)

    def conformal_scale(self, factor: ScalarField, name: str = "") -> "MetricChart":
        """Metric ``u * g`` for a positive scalar field ``u``.

        Derivatives are assembled analytically by the product rule, never by
        re-differencing the scaled components, so the scaled chart keeps the
        full accuracy of the base chart.
        """
        base = self

        def evaluator(p: np.ndarray):
            G, dG, d2G = base.components(p)
            u, du, d2u = factor.evaluate(p)
            Gs = u * G
            dGs = u * dG + np.einsum("k,ij->kij", du, G)
            d2Gs = (
                u * d2G
                + np.einsum("kl,ij->klij", d2u, G)
                + np.einsum("k,lij->klij", du, dG)
                + np.einsum("l,kij->klij", du, dG)
            )
            return Gs, dGs, d2Gs

        return MetricChart(evaluator, base.dim, base.domain, name or f"{base.name}*scaled")

    # -- evaluation ----------------------------------------------------------

    def components(self, p) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        p = as_point(p, self.dim)
        if not self.domain.contains(p):
            raise DomainError(f"point {p.tolist()} outside chart domain {self.domain}")
        return self._evaluator(p)

    def matrix(self, p) -> np.ndarray:
        return self.components(p)[0]


# -- pointwise linear algebra -------------------------------------------------


def metric_inverse(G: np.ndarray) -> np.ndarray:
    """Inverse metric via Cholesky; raises SingularMetric when not SPD."""
    try:
        chol = np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise SingularMetric(f"metric matrix is not positive definite: {exc}") from exc
    inv_chol = np.linalg.inv(chol)
    return inv_chol.T @ inv_chol


def tensor_gnorm(G_inv: np.ndarray, T: np.ndarray) -> float:
    """Metric norm |T|_g of a covariant 2-tensor."""
    return float(np.sqrt(max(np.einsum("ik,jl,ij,kl->", G_inv, G_inv, T, T), 0.0)))


# -- curvature ----------------------------------------------------------------


def christoffel(g: MetricChart, p) -> np.ndarray:
    """Christoffel symbols Gamma^k_{ij} = (1/2) g^{kl}(d_i g_jl + d_j g_il - d_l g_ij)."""
    G, dG, _ = g.components(p)
    G_inv = metric_inverse(G)
    return _christoffel_from(G_inv, dG)


def _christoffel_from(G_inv: np.ndarray, dG: np.ndarray) -> np.ndarray:
    # dG[k, i, j] = d_k g_ij
    bracket = np.einsum("ijl->lij", dG) + np.einsum("jil->lij", dG) - dG
    return 0.5 * np.einsum("kl,lij->kij", G_inv, bracket)


def christoffel_with_derivative(g: MetricChart, p) -> tuple[np.ndarray, np.ndarray]:
    """Gamma^k_{ij} and its coordinate derivative d_m Gamma^k_{ij} (index m first)."""
    G, dG, d2G = g.components(p)
    G_inv = metric_inverse(G)
    gamma = _christoffel_from(G_inv, dG)
    # d_m g^{kl} = - g^{ka} (d_m g_ab) g^{bl}
    dG_inv = -np.einsum("ka,mab,bl->mkl", G_inv, dG, G_inv)
    bracket = np.einsum("ijl->lij", dG) + np.einsum("jil->lij", dG) - dG
    dbracket = np.einsum("mijl->mlij", d2G) + np.einsum("mjil->mlij", d2G) - d2G
    dgamma = 0.5 * (
        np.einsum("mkl,lij->mkij", dG_inv, bracket) + np.einsum("kl,mlij->mkij", G_inv, dbracket)
    )
    return gamma, dgamma


def ricci(g: MetricChart, p) -> SymmetricForm:
    """Ricci tensor R_ij = d_k Gamma^k_ij - d_i Gamma^k_kj + Gamma^k_kl Gamma^l_ij - Gamma^k_il Gamma^l_kj."""
    gamma, dgamma = christoffel_with_derivative(g, p)
    ric = (
        np.einsum("kkij->ij", dgamma)
        - np.einsum("ikkj->ij", dgamma)
        + np.einsum("kkl,lij->ij", gamma, gamma)
        - np.einsum("kil,lkj->ij", gamma, gamma)
    )
    return SymmetricForm(0.5 * (ric + ric.T))


def scalar_curvature(g: MetricChart, p) -> float:
    G, _, _ = g.components(p)
    G_inv = metric_inverse(G)
    return float(np.einsum("ij,ij->", G_inv, ricci(g, p).mat))


# -- scalar-field calculus ------------------------------------------------------


def hessian(g: MetricChart, f: ScalarField, p) -> SymmetricForm:
    """Metric Hessian (hess f)_ij = d_i d_j f - Gamma^k_ij d_k f."""
    _, grad, hess_coords = f.evaluate(p)
    gamma = christoffel(g, p)
    return SymmetricForm(hess_coords - np.einsum("kij,k->ij", gamma, grad))


def gradient(g: MetricChart, f: ScalarField, p) -> np.ndarray:
    """Contravariant gradient (grad f)^i = g^{ij} d_j f."""
    G, _, _ = g.components(p)
    _, grad, _ = f.evaluate(p)
    return metric_inverse(G) @ grad


def grad_norm_sq(g: MetricChart, f: ScalarField, p) -> float:
    G, _, _ = g.components(p)
    _, grad, _ = f.evaluate(p)
    return float(grad @ metric_inverse(G) @ grad)


def laplacian(g: MetricChart, f: ScalarField, p) -> float:
    """lap f = trace_g(hess f), so lap(|x|^2 / 2) = n on flat space."""
    G, _, _ = g.components(p)
    return float(np.einsum("ij,ij->", metric_inverse(G), hessian(g, f, p).mat))


def laplacian_divergence_form(g: MetricChart, f: ScalarField, p) -> float:
    """Independent oracle: lap f = det(g)^{-1/2} d_i(det(g)^{1/2} g^{ij} d_j f)."""
    G, dG, _ = g.components(p)
    G_inv = metric_inverse(G)
    _, grad, hess_coords = f.evaluate(p)
    dG_inv = -np.einsum("ka,mab,bl->mkl", G_inv, dG, G_inv)
    dlog_sqrt_det = 0.5 * np.einsum("ij,mij->m", G_inv, dG)
    return float(
        np.einsum("ij,ij->", G_inv, hess_coords)
        + np.einsum("iij,j->", dG_inv, grad)
        + np.einsum("i,ij,j->", dlog_sqrt_det, G_inv, grad)
    )


# -- conformal-change identities ------------------------------------------------


def _check_conformal_factor(tau_val: float):
    if abs(tau_val) < 1e-12:
        raise DegenerateConformalFactor(f"conformal factor tau = {tau_val!r} vanishes")


def conformal_hessian_check(g: MetricChart, tau: ScalarField, f: ScalarField, p) -> float:
    """Max-norm residual between the direct Hessian of f in g/tau^2 and its
    expression through g-quantities.

    The two evaluation paths are independent: the direct side differentiates
    the scaled metric, the assembled side uses only g-level data at p.
    """
    p = as_point(p, g.dim)
    tau_val, dtau, _ = tau.evaluate(p)
    _check_conformal_factor(tau_val)

    factor = apply_univariate(tau, lambda t: t**-2, lambda t: -2 * t**-3, lambda t: 6 * t**-4)
    g_hat = g.conformal_scale(factor, name="conformal")
    direct = hessian(g_hat, f, p).mat

    G, _, _ = g.components(p)
    G_inv = metric_inverse(G)
    _, df, _ = f.evaluate(p)
    hess_f = hessian(g, f, p).mat
    sym = np.outer(dtau, df)
    cross = sym + sym.T  # 2 dtau (.) df
    assembled = hess_f + (cross - float(dtau @ G_inv @ df) * G) / tau_val
    return float(np.max(np.abs(direct - assembled)))


def conformal_ricci_check(g: MetricChart, tau: ScalarField, p) -> float:
    """Max-norm residual of the conformal Ricci identity at p.

    Always checks the general identity (with the Hessian of tau); when tau
    is a composition of a 1-d profile with a field f, additionally checks the
    expanded identity with the tau', tau'' terms and returns the larger of
    the two residuals.
    """
    p = as_point(p, g.dim)
    n = g.dim
    tau_val, dtau, _ = tau.evaluate(p)
    _check_conformal_factor(tau_val)

    factor = apply_univariate(tau, lambda t: t**-2, lambda t: -2 * t**-3, lambda t: 6 * t**-4)
    g_hat = g.conformal_scale(factor, name="conformal")
    direct = ricci(g_hat, p).mat

    G, _, _ = g.components(p)
    G_inv = metric_inverse(G)
    ric = ricci(g, p).mat
    hess_tau = hessian(g, tau, p).mat
    lap_tau = float(np.einsum("ij,ij->", G_inv, hess_tau))
    grad_tau_sq = float(dtau @ G_inv @ dtau)
    bracket = lap_tau / tau_val - (n - 1) * grad_tau_sq / tau_val**2
    assembled = ric + (n - 2) / tau_val * hess_tau + bracket * G
    residual = float(np.max(np.abs(direct - assembled)))

    if isinstance(tau, FieldOfField):
        f = tau.base
        f_val, df, _ = f.evaluate(p)
        hess_f = hessian(g, f, p).mat
        tau1 = tau.profile.deriv(f_val)
        tau2 = tau.profile.deriv2(f_val)
        expanded = (
            ric
            + (n - 2) * tau1 / tau_val * hess_f
            + (n - 2) * tau2 / tau_val * np.outer(df, df)
            + bracket * G
        )
        residual = max(residual, float(np.max(np.abs(direct - expanded))))
    return residual
