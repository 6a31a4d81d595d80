"""The closed-form gradient Kahler-Ricci soliton family over CP^1.

The family is described by one profile phi(f) on an interval of potential
values.  With f_c = f - c and S_j the degree-j truncated exponential series,

    phi(f) = f_c^{-m} (A * S_m(f_c) + B * e^{f_c}) + phi_sign * kappa / (2m),

which solves the second-order profile ODE

    f_c^2 phi'' + f_c (m - f_c * alpha) phi' - m phi = -sgn(phi) * kappa / 2

with alpha = 1 on intervals where sgn(phi) = phi_sign (kappa is the Einstein
constant of the base metric).  The sign of the constant term is an explicit
branch parameter because the ODE couples it to sgn(phi): the default -1
reproduces the fixed-minus-sign form of the constant, while positive-profile
intervals with kappa != 0 need +1.  The soliton coefficient

    c(f) = alpha phi + (alpha f_c - (m+1)) phi' - f_c phi''

is constant in f on branch-consistent intervals (equal to A/m! + phi_sign *
kappa/(2m) for alpha = 1).

From the profile the module builds Q(f) = 2 f_c phi(f) (the squared gradient
norm of the potential), the fiber-norm map ell(f) solving
(a/Q) df = d(log ell), and, for m = 2, the explicit real 4-dimensional chart
of the metric on a power of the tautological line bundle over CP^1:

    g|_horizontal = 2 |f_c| pi^* h,    g|_vertical = Q(f) / (p ell)^2 Re<.,.>

with h the Fubini-Study metric normalized to ric(h) = kappa h, the fiber
Hermitian metric h_L = (1 + |z|^2)^s, and the horizontal space the kernel of
the Chern-connection form.  The constants (a, p, s, kappa) must satisfy one
relation for the fundamental 2-form to close; rather than hard-coding a
normalization, the assembly calibrates it by sweeping the dimensionless
ratio a s / (p^2 lambda_h) and keeping the value that minimizes the
numerically measured closedness defect.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate, optimize

from . import autodiff as ad
from . import chart as ct
from .errors import (
    CalibrationFailure,
    DomainError,
    DomainSplit,
    IntegrationFailure,
    PoleError,
)
from .sampling import Box, sample_box

__all__ = [
    "SkrpParams",
    "PhiProfile",
    "QProfile",
    "EllMap",
    "CalabiChart",
    "phi_closed",
    "phi_profile",
    "phi_ode_residual",
    "phi_ode_integrate",
    "soliton_coeff_profile",
    "q_profile",
    "q_derivative",
    "q_domain",
    "as_q_profile",
    "ell_map",
    "assemble_calabi_metric",
    "hermitian_hessian_residual",
    "killing_residual",
    "kahler_closedness_residual",
    "hermitian_metric_residual",
    "dual_metric_direct",
    "standard_complex_structure",
]

# Relative margin keeping evaluation intervals away from the profile pole.
POLE_MARGIN = 1e-6


@dataclass(frozen=True)
class SkrpParams:
    """Parameters of one member of the soliton profile family.

    Fields
    ------
    m : complex dimension of the total space (m >= 2; the chart assembly is
        implemented for m = 2, real dimension 4).
    kappa : Einstein constant of the base metric h.
    c : shift of the potential, f_c = f - c.
    A, B : constants of the closed-form profile.
    I : open interval of f-values (endpoints may be +-inf).
    s : positive integer power of the tautological bundle.
    a : constant of the fiber-norm ODE (a/Q) df = d(log ell).
    p : nonzero constant scaling the fiber metric block.
    phi_sign : sign of the constant term kappa/(2m); must match sgn(phi) on
        the working interval for the profile ODE to hold (default -1, the
        fixed-minus-sign form).
    """

    m: int
    kappa: float
    c: float
    A: float
    B: float
    I: tuple[float, float]
    s: int = 1
    a: float = 1.0
    p: float = 1.0
    phi_sign: int = -1

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ValueError("m must be an integer >= 2")
        if int(self.s) != self.s or self.s < 1:
            raise ValueError("bundle power s must be a positive integer")
        if self.p == 0 or self.a == 0:
            raise ValueError("fiber constants a, p must be nonzero")
        if self.phi_sign not in (-1, 1):
            raise ValueError("phi_sign must be -1 or +1")
        lo, hi = self.I
        if not lo < hi:
            raise ValueError(f"interval I = {self.I} must be nonempty")
        # The closed form has a genuine pole at f = c only when the series
        # numerator A + B does not vanish there.
        if self.A + self.B != 0.0 and lo < self.c < hi:
            raise ValueError("interval I must avoid the pole f = c when A + B != 0")

    @property
    def pole_margin(self) -> float:
        lo, hi = self.I
        width = hi - lo if math.isfinite(hi) and math.isfinite(lo) else 1.0 + abs(self.c)
        return POLE_MARGIN * width


@dataclass(frozen=True)
class PhiProfile:
    """Profile phi with analytic first and second derivatives."""

    phi: Callable[[float], float]
    dphi: Callable[[float], float]
    d2phi: Callable[[float], float]
    params: SkrpParams

    def triple(self, f: float) -> tuple[float, float, float]:
        return self.phi(f), self.dphi(f), self.d2phi(f)


def _series_S(x: float, j: int) -> float:
    """Truncated exponential series S_j(x) = sum_{k<=j} x^k / k!."""
    acc = 1.0
    term = 1.0
    for k in range(1, j + 1):
        term *= x / k
        acc += term
    return acc


def _laurent_U(x: float, m: int) -> tuple[float, float, float]:
    """U = x^{-m} S_m(x) with two derivatives (Laurent polynomial, exact)."""
    u = u1 = u2 = 0.0
    kfact = 1.0
    for k in range(m + 1):
        if k > 0:
            kfact *= k
        e = k - m
        mono = x**e / kfact
        u += mono
        if e != 0:
            u1 += e * x ** (e - 1) / kfact
            u2 += e * (e - 1) * x ** (e - 2) / kfact
    return u, u1, u2


def _scaled_remainder_T(x: float, m: int) -> tuple[float, float, float]:
    """T = x^{-m} (e^x - S_m(x)) with two derivatives.

    Entire in x; the subtracted form loses all digits near x = 0, so a short
    power series is used there: T = sum_{j>=1} x^j / (m+j)!.
    """
    if abs(x) <= 1.0:
        t = t1 = t2 = 0.0
        fact = float(math.factorial(m))
        pow_jm2 = 1.0  # x^(j-2), meaningful from j = 2 on
        pow_jm1 = 1.0  # x^(j-1)
        for j in range(1, 30):
            fact *= m + j
            t += pow_jm1 * x / fact
            t1 += j * pow_jm1 / fact
            if j >= 2:
                t2 += j * (j - 1) * pow_jm2 / fact
            pow_jm2 = pow_jm1
            pow_jm1 = pow_jm1 * x
        return t, t1, t2
    ex = math.exp(x)
    r = [ex - _series_S(x, j) for j in (m, m - 1, m - 2)]
    t = x ** (-m) * r[0]
    t1 = x ** (-m) * r[1] - m * x ** (-m - 1) * r[0]
    t2 = (
        x ** (-m) * r[2]
        - 2 * m * x ** (-m - 1) * r[1]
        + m * (m + 1) * x ** (-m - 2) * r[0]
    )
    return t, t1, t2


def phi_closed(params: SkrpParams, f: float) -> tuple[float, float, float]:
    """Profile value and derivatives (phi, phi', phi'') at f.

    Derivatives are the hand-differentiated closed forms, not differences.
    Raises :class:`PoleError` at f = c when the numerator is singular there.
    """
    x = f - params.c
    head = params.A + params.B
    if head != 0.0 and abs(x) < params.pole_margin:
        raise PoleError(f"profile has a pole at f = c = {params.c}; got f = {f}")
    const = params.phi_sign * params.kappa / (2.0 * params.m)
    t, t1, t2 = _scaled_remainder_T(x, params.m)
    if head == 0.0:
        return (
            params.B * t + const,
            params.B * t1,
            params.B * t2,
        )
    u, u1, u2 = _laurent_U(x, params.m)
    return (
        head * u + params.B * t + const,
        head * u1 + params.B * t1,
        head * u2 + params.B * t2,
    )


def phi_profile(params: SkrpParams) -> PhiProfile:
    return PhiProfile(
        phi=lambda f: phi_closed(params, f)[0],
        dphi=lambda f: phi_closed(params, f)[1],
        d2phi=lambda f: phi_closed(params, f)[2],
        params=params,
    )


def phi_ode_residual(
    params: SkrpParams,
    alpha: float,
    f: float,
    profile: PhiProfile | None = None,
) -> float:
    """Left-minus-right residual of the profile ODE at f.

    Zero (to roundoff) for the closed form with alpha = 1 on intervals where
    sgn(phi) matches the params' branch sign.
    """
    phi, dphi, d2phi = (profile or phi_profile(params)).triple(f)
    x = f - params.c
    sgn = math.copysign(1.0, phi) if phi != 0.0 else 1.0
    return x * x * d2phi + x * (params.m - x * alpha) * dphi - params.m * phi + sgn * params.kappa / 2.0


def phi_ode_integrate(
    params: SkrpParams,
    alpha: float,
    f0: float,
    phi0: float,
    dphi0: float,
    f: float,
) -> tuple[float, float]:
    """Numerical oracle: integrate the profile ODE from (f0, phi0, phi0') to f.

    Independent of the closed form; adaptive high-order Runge-Kutta.
    """
    if f == f0:
        return phi0, dphi0

    def rhs(t, y):
        x = t - params.c
        phi, dphi = y
        sgn = math.copysign(1.0, phi) if phi != 0.0 else 1.0
        d2 = (-x * (params.m - x * alpha) * dphi + params.m * phi - sgn * params.kappa / 2.0) / (x * x)
        return [dphi, d2]

    sol = integrate.solve_ivp(
        rhs, (f0, f), [phi0, dphi0], method="DOP853", rtol=1e-11, atol=1e-13, dense_output=False
    )
    if not sol.success:
        raise IntegrationFailure(f"profile ODE integration failed: {sol.message}")
    return float(sol.y[0, -1]), float(sol.y[1, -1])


def soliton_coeff_profile(params: SkrpParams, alpha: float, f: float) -> float:
    """Soliton coefficient c = alpha phi + (alpha f_c - (m+1)) phi' - f_c phi''.

    Constant in f for the closed-form profile with alpha = 1 (the value is
    A/m! + phi_sign * kappa/(2m)); perturbing alpha breaks constancy.
    """
    phi, dphi, d2phi = phi_closed(params, f)
    x = f - params.c
    return alpha * phi + (alpha * x - (params.m + 1)) * dphi - x * d2phi


def q_profile(params: SkrpParams, f: float) -> float:
    """Q(f) = 2 f_c phi(f), the squared gradient norm of the potential."""
    return 2.0 * (f - params.c) * phi_closed(params, f)[0]


def q_derivative(params: SkrpParams, f: float) -> float:
    phi, dphi, _ = phi_closed(params, f)
    return 2.0 * phi + 2.0 * (f - params.c) * dphi


def q_domain(params: SkrpParams, grid: int = 2048) -> list[tuple[float, float]]:
    """Maximal open subintervals of I on which Q > 0.

    Sign changes of phi and of f_c are bracketed on a fine grid and refined by
    root finding; an unbounded right end is scanned out to where the
    exponential/constant behaviour of the profile is settled.
    """
    lo, hi = params.I
    scan_lo = lo if math.isfinite(lo) else params.c - 60.0
    scan_hi = hi if math.isfinite(hi) else params.c + 60.0
    margin = params.pole_margin

    # Split at the pole; with A + B = 0 the closed form is regular at c and
    # the zero of f_c there is just an ordinary zero of Q.
    has_pole = params.A + params.B != 0.0
    cuts = [scan_lo, scan_hi]
    if has_pole and scan_lo < params.c < scan_hi:
        cuts[1:1] = [params.c]
    pieces = []
    for left, right in zip(cuts[:-1], cuts[1:]):
        if has_pole:
            left = left + margin if left == params.c else left
            right = right - margin if right == params.c else right
        if left < right:
            pieces.append((left, right))

    def q(f):
        return q_profile(params, f)

    intervals: list[tuple[float, float]] = []
    for left, right in pieces:
        xs = np.linspace(left + 1e-12 * (right - left), right - 1e-12 * (right - left), grid)
        vals = np.array([q(x) for x in xs])
        roots = []
        for i in range(len(xs) - 1):
            if vals[i] == 0.0:
                roots.append(xs[i])
            elif vals[i] * vals[i + 1] < 0:
                roots.append(optimize.brentq(q, xs[i], xs[i + 1], xtol=1e-14))
        if not has_pole and left < params.c < right:
            roots.append(params.c)
        edges = sorted({left, right, *roots})
        for a_, b_ in zip(edges[:-1], edges[1:]):
            mid = 0.5 * (a_ + b_)
            if b_ > a_ and q(mid) > 0:
                b_out = b_
                if b_ == scan_hi and not math.isfinite(hi):
                    b_out = math.inf
                a_out = a_
                if a_ == scan_lo and not math.isfinite(lo):
                    a_out = -math.inf
                intervals.append((a_out, b_out))
    return intervals


# -- generic Q-profile (shared with the completeness module) -------------------


@dataclass(frozen=True)
class QProfile:
    """Minimal profile interface: Q with one derivative on an interval."""

    q: Callable[[float], float]
    dq: Callable[[float], float]
    interval: tuple[float, float]
    m: int
    a: float = 1.0
    c: float = 0.0
    params: SkrpParams | None = None


def as_q_profile(params_or_profile) -> QProfile:
    if isinstance(params_or_profile, QProfile):
        return params_or_profile
    params = params_or_profile
    return QProfile(
        q=lambda f: q_profile(params, f),
        dq=lambda f: q_derivative(params, f),
        interval=params.I,
        m=params.m,
        a=params.a,
        c=params.c,
        params=params,
    )


class EllMap:
    """Monotone fiber-norm map ell(f) on a Q-positive interval.

    log ell(f) = integral_{f0}^{f} a / Q(t) dt with ell(f0) = 1.  Built once
    from a cumulative-quadrature table over a fixed grid; lookups refine a
    table bracket by Newton steps on the exact quadrature, so round trips
    f -> ell -> f are accurate to ~1e-12.  Read-only after construction.
    """

    def __init__(self, profile: QProfile, f0: float, bounds: tuple[float, float] | None = None, nodes: int = 257):
        self.profile = profile
        lo, hi = bounds if bounds is not None else profile.interval
        if not (lo < f0 < hi):
            raise DomainError(f"anchor f0 = {f0} must lie inside ({lo}, {hi})")
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise DomainError("ell map needs finite working bounds; pass bounds=")
        self.f0 = float(f0)
        self._grid = np.linspace(lo, hi, nodes)
        qvals = np.array([profile.q(f) for f in self._grid])
        if np.any(qvals <= 0):
            bad = self._grid[qvals <= 0][0]
            raise DomainSplit(f"Q vanishes or changes sign inside the working interval near f = {bad}")
        integrand = lambda f: profile.a / profile.q(f)
        # Cumulative log-ell values at the grid nodes, anchored at f0.
        segs = np.empty(nodes - 1)
        for i in range(nodes - 1):
            segs[i], _ = integrate.quad(integrand, self._grid[i], self._grid[i + 1], epsabs=1e-14, epsrel=1e-13, limit=200)
        cumulative = np.concatenate([[0.0], np.cumsum(segs)])
        anchor = np.interp(self.f0, self._grid, cumulative)
        # Refine the anchor exactly so log ell(f0) = 0.
        i0 = int(np.searchsorted(self._grid, self.f0)) - 1
        i0 = min(max(i0, 0), nodes - 2)
        extra, _ = integrate.quad(integrand, self._grid[i0], self.f0, epsabs=1e-14, epsrel=1e-13, limit=200)
        anchor = cumulative[i0] + extra
        self._t_nodes = cumulative - anchor
        self._integrand = integrand
        self.bounds = (float(lo), float(hi))
        self.increasing = bool(self._t_nodes[-1] > self._t_nodes[0])

    def log_ell(self, f: float) -> float:
        lo, hi = self.bounds
        if not (lo <= f <= hi):
            raise DomainError(f"f = {f} outside ell-map bounds {self.bounds}")
        i = int(np.searchsorted(self._grid, f)) - 1
        i = min(max(i, 0), len(self._grid) - 2)
        extra, _ = integrate.quad(self._integrand, self._grid[i], f, epsabs=1e-14, epsrel=1e-13, limit=200)
        return float(self._t_nodes[i] + extra)

    def ell(self, f: float) -> float:
        return math.exp(self.log_ell(f))

    def f_of_log_ell(self, t: float) -> float:
        t_nodes = self._t_nodes if self.increasing else -self._t_nodes
        tt = t if self.increasing else -t
        if not (t_nodes[0] - 1e-12 <= tt <= t_nodes[-1] + 1e-12):
            raise DomainError(f"log ell = {t} outside ell-map range")
        i = int(np.searchsorted(t_nodes, tt)) - 1
        i = min(max(i, 0), len(self._grid) - 2)
        f = float(np.interp(tt, t_nodes[i : i + 2], self._grid[i : i + 2]))
        # Newton refinement on log_ell(f) - t; derivative is a/Q.
        for _ in range(60):
            resid = self.log_ell(f) - t
            step = resid * self.profile.q(f) / self.profile.a
            f_new = min(max(f - step, self.bounds[0]), self.bounds[1])
            if abs(f_new - f) <= 1e-15 * (1.0 + abs(f)):
                return f_new
            f = f_new
        return f

    def f_of_ell(self, ell: float) -> float:
        if ell <= 0:
            raise DomainError("fiber norm ell must be positive")
        return self.f_of_log_ell(math.log(ell))

    def dfdt(self, f: float) -> float:
        """df / d(log ell) = Q(f) / a."""
        return self.profile.q(f) / self.profile.a

    def d2fdt2(self, f: float) -> float:
        return self.profile.q(f) * self.profile.dq(f) / self.profile.a**2


def ell_map(params_or_profile, f0: float, bounds: tuple[float, float] | None = None) -> EllMap:
    """Build the fiber-norm map anchored at ell(f0) = 1."""
    return EllMap(as_q_profile(params_or_profile), f0, bounds=bounds)


# -- explicit chart assembly (m = 2) -------------------------------------------

# Standard complex structure in real coordinates (z1, z2, w1, w2).
_J4 = np.array(
    [
        [0.0, -1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, -1.0],
        [0.0, 0.0, 1.0, 0.0],
    ]
)


def standard_complex_structure(m: int = 2) -> np.ndarray:
    if m != 2:
        raise NotImplementedError("only the 4-dimensional (m = 2) chart is assembled")
    return _J4.copy()


@dataclass(frozen=True)
class CalabiChart:
    """Assembled 4-dimensional chart of a profile-family metric.

    Coordinates are (z1, z2, w1, w2): z the affine base coordinate, w != 0
    the fiber coordinate of the trivialized bundle power.  The potential
    field is f(log ell(z, w)) through the fiber-norm map.
    """

    params: SkrpParams
    metric: ct.MetricChart
    f_field: ct.ScalarField
    complex_structure: np.ndarray = field(repr=False)
    ell: EllMap = field(repr=False)
    lambda_h: float
    f_window: tuple[float, float]
    fc_sign: float
    calibration: dict = field(repr=False, default_factory=dict)
    name: str = ""

    @property
    def domain(self) -> Box:
        return self.metric.domain

    def coefficient(self) -> float:
        """Constant soliton coefficient of the assembled pair."""
        return soliton_coeff_profile(self.params, 1.0, 0.5 * sum(self.f_window))

    def fiber_level_range(self, margin: float = 0.01) -> tuple[float, float]:
        """Potential levels reachable along the fiber axis over z = 0.

        Flow curves stay on that axis, so this is the usable (f1, f2) range
        for in-chart arc-length integration.
        """
        w_lo, w_hi = self.domain.lo[2], self.domain.hi[2]
        f_a = self.ell.f_of_ell(w_lo * (1.0 + margin))
        f_b = self.ell.f_of_ell(w_hi * (1.0 - margin))
        return (f_a, f_b) if f_a < f_b else (f_b, f_a)


def _fubini_study_chart(lambda_h: float) -> ct.MetricChart:
    def comps(j):
        z1, z2 = j
        conf = lambda_h / (1.0 + z1 * z1 + z2 * z2) ** 2
        zero = ad.constant(0.0, 2)
        return [[conf, zero], [zero, conf]]

    return ct.MetricChart.from_jets(comps, 2, Box([-0.9, -0.9], [0.9, 0.9]), "fubini-study")


class _PotentialCore:
    """Shared closed-form scaffolding of the chart: t(z, w) and f(t) jets."""

    def __init__(self, params: SkrpParams, ell: EllMap):
        self.params = params
        self.ell = ell
        self._cache: dict[float, float] = {}

    def f_value(self, t: float) -> float:
        f = self._cache.get(t)
        if f is None:
            f = self.ell.f_of_log_ell(t)
            if len(self._cache) > 4096:
                self._cache.clear()
            self._cache[t] = f
        return f

    def t_jet(self, jets):
        z1, z2, w1, w2 = jets
        one_pz = 1.0 + z1 * z1 + z2 * z2
        wsq = w1 * w1 + w2 * w2
        return 0.5 * self.params.s * ad.jet_log(one_pz) + 0.5 * ad.jet_log(wsq)

    def f_jet(self, jets):
        t = self.t_jet(jets)
        f0 = self.f_value(t.val)
        return ad.lift_univariate(t, f0, self.ell.dfdt(f0), self.ell.d2fdt2(f0))


def _metric_components_fn(params: SkrpParams, core: _PotentialCore, lambda_h: float, fc_sign: float, conformal_rate: float = 0.0):
    """Jet function of the 4x4 metric components; an optional conformal factor
    exp(conformal_rate * f) is multiplied in analytically."""

    s = float(params.s)
    inv_p2 = 1.0 / params.p**2
    profile = phi_profile(params)

    def comps(jets):
        z1, z2, w1, w2 = jets
        one_pz = 1.0 + z1 * z1 + z2 * z2
        wsq = w1 * w1 + w2 * w2
        fj = core.f_jet(jets)
        phi_j = ad.lift_univariate(fj, *profile.triple(fj.val))
        x = fj - params.c
        q_j = 2.0 * x * phi_j
        pre = q_j * inv_p2
        base = (2.0 * fc_sign) * x * (lambda_h * one_pz**-2)
        if conformal_rate != 0.0:
            scale = ad.jet_exp(conformal_rate * fj)
            pre = pre * scale
            base = base * scale

        inv_o = one_pz**-1
        inv_r = wsq**-1
        d = [s * z1 * inv_o, s * z2 * inv_o, w1 * inv_r, w2 * inv_r]
        sg = [(-s) * z2 * inv_o, s * z1 * inv_o, (-1.0) * w2 * inv_r, w1 * inv_r]

        G = [[None] * 4 for _ in range(4)]
        for i in range(4):
            for j2 in range(i, 4):
                entry = pre * (d[i] * d[j2] + sg[i] * sg[j2])
                if i == j2 and i < 2:
                    entry = entry + base
                G[i][j2] = G[j2][i] = entry
        return G

    return comps


def _chart_window(params: SkrpParams, ell: EllMap, f_window: tuple[float, float]) -> Box:
    """Coordinate box whose fiber-norm values stay inside the f-window."""
    fa, fb = f_window
    la, lb = sorted((ell.ell(fa), ell.ell(fb)))
    for zmax in (0.25, 0.15, 0.08, 0.04):
        factor_max = (1.0 + 2.0 * zmax * zmax) ** (params.s / 2.0)
        w1_lo = 1.02 * la
        w2_half = 0.08 * la
        top = 0.98 * lb / factor_max
        if top * top <= w2_half * w2_half:
            continue
        w1_hi = math.sqrt(top * top - w2_half * w2_half)
        if w1_hi > 1.05 * w1_lo:
            return Box([-zmax, -zmax, w1_lo, -w2_half], [zmax, zmax, w1_hi, w2_half])
    raise CalibrationFailure(
        f"no coordinate window fits the fiber-norm range ({la:.3g}, {lb:.3g}); widen the f-interval"
    )


def kahler_closedness_residual(metric: ct.MetricChart, J: np.ndarray, p) -> float:
    """Max component of the exterior derivative of the fundamental 2-form."""
    _, dG, _ = metric.components(p)
    # omega_ij = J^a_i g_aj; d_k omega_ij from d_k g_aj.
    domega = np.einsum("ai,kaj->kij", J, dG)
    t = domega + np.einsum("ijk->kij", domega) + np.einsum("jki->kij", domega)
    return float(np.max(np.abs(t)))


def hermitian_metric_residual(metric: ct.MetricChart, J: np.ndarray, p) -> float:
    G = metric.matrix(p)
    return float(np.max(np.abs(J.T @ G @ J - G)))


def hermitian_hessian_residual(chart: CalabiChart, p) -> float:
    """Max-norm of hess f (J., J.) - hess f; zero when the Hessian is Hermitian."""
    H = ct.hessian(chart.metric, chart.f_field, p).mat
    J = chart.complex_structure
    return float(np.max(np.abs(J.T @ H @ J - H)))


def killing_residual(chart: CalabiChart, p) -> float:
    """Max component of the Lie derivative of g along u = J grad f."""
    metric, f, J = chart.metric, chart.f_field, chart.complex_structure
    G, dG, _ = metric.components(p)
    G_inv = ct.metric_inverse(G)
    _, df, d2f = f.evaluate(p)
    u = J @ (G_inv @ df)
    dG_inv = -np.einsum("ka,mab,bl->mkl", G_inv, dG, G_inv)
    du = np.einsum("kl,ilm,m->ik", J, dG_inv, df) + np.einsum("kl,lm,im->ik", J, G_inv, d2f)
    lie = np.einsum("k,kij->ij", u, dG) + np.einsum("ik,kj->ij", du, G) + np.einsum("jk,ik->ij", du, G)
    return float(np.max(np.abs(lie)))


def gradient_soliton_residual(chart: CalabiChart, p, alpha: float = 1.0) -> float:
    """g-norm of ric + alpha hess f - c g with the profile's constant c."""
    G, _, _ = chart.metric.components(p)
    G_inv = ct.metric_inverse(G)
    tensor = (
        ct.ricci(chart.metric, p).mat
        + alpha * ct.hessian(chart.metric, chart.f_field, p).mat
        - chart.coefficient() * G
    )
    return ct.tensor_gnorm(G_inv, tensor)


# Ratios of a s / (p^2 lambda_h) tried by the calibration sweep.
CALIBRATION_RATIOS = (0.5, -0.5, 1.0, -1.0, 2.0, -2.0)
CLOSEDNESS_TOL = 1e-8


def assemble_calabi_metric(
    params: SkrpParams,
    f_window: tuple[float, float] | None = None,
    anchor: float | None = None,
    name: str = "",
    calibrate: bool = True,
) -> CalabiChart:
    """Build the explicit 4-dimensional chart for m = 2.

    The base is CP^1 with the Fubini-Study metric normalized so ric(h) =
    kappa h (checked numerically), the fiber metric is (1 + |z|^2)^s, and the
    vertical projection uses the Chern-connection kernel.  The constant a is
    calibrated by sweeping a s / (p^2 lambda_h) over a short ratio list and
    keeping the closedness-minimizing value; the assembled chart is then
    verified to be Hermitian, closed, and a gradient soliton with alpha = 1.
    """
    if params.m != 2:
        raise NotImplementedError("chart assembly is implemented for m = 2 only")
    if params.kappa <= 0:
        raise CalibrationFailure("the CP^1 base needs a positive Einstein constant kappa")

    lambda_h = 4.0 / params.kappa
    base = _fubini_study_chart(lambda_h)
    zb = np.array([0.21, -0.33])
    base_resid = np.max(np.abs(ct.ricci(base, zb).mat - params.kappa * base.matrix(zb)))
    if base_resid > 1e-9:
        raise CalibrationFailure(f"base normalization failed: |ric(h) - kappa h| = {base_resid:.3e}")

    positive = q_domain(params)
    if f_window is None:
        lo, hi = params.I
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise DomainError("pass an explicit finite f_window for unbounded intervals")
        width = hi - lo
        f_window = (lo + 0.15 * width, hi - 0.15 * width)
    if not any(a_ <= f_window[0] and f_window[1] <= b_ for a_, b_ in positive):
        raise DomainSplit(f"f-window {f_window} is not inside a Q-positive interval {positive}")
    anchor = anchor if anchor is not None else 0.5 * (f_window[0] + f_window[1])
    fc_sign = math.copysign(1.0, anchor - params.c)

    ratios = CALIBRATION_RATIOS if calibrate else (params.a * params.s / (params.p**2 * lambda_h),)
    sweep: dict[float, float] = {}
    best = None
    pad = 0.02 * (f_window[1] - f_window[0])
    for ratio in ratios:
        a_cand = ratio * params.p**2 * lambda_h / params.s
        cand = replace(params, a=a_cand)
        ell = ell_map(cand, anchor, bounds=(f_window[0] - pad, f_window[1] + pad))
        core = _PotentialCore(cand, ell)
        domain = _chart_window(cand, ell, f_window)
        metric = ct.MetricChart.from_jets(
            _metric_components_fn(cand, core, lambda_h, fc_sign), 4, domain, name or "calabi-m2"
        )
        pts = sample_box(domain, 12, seed=7)
        resid = max(kahler_closedness_residual(metric, _J4, p) for p in pts)
        sweep[ratio] = resid
        if best is None or resid < best[1]:
            best = (ratio, resid, cand, ell, core, domain, metric)

    ratio, resid, cand, ell, core, domain, metric = best
    if resid > CLOSEDNESS_TOL:
        raise CalibrationFailure(
            f"no calibration ratio reached closedness {CLOSEDNESS_TOL:.1e}; best {ratio} gave {resid:.3e}"
        )

    f_field = ct.ScalarField(core.f_jet, 4, name="potential")
    chart = CalabiChart(
        params=cand,
        metric=metric,
        f_field=f_field,
        complex_structure=_J4.copy(),
        ell=ell,
        lambda_h=lambda_h,
        f_window=tuple(f_window),
        fc_sign=fc_sign,
        calibration={"sweep": sweep, "ratio": ratio, "a": cand.a, "closedness": resid},
        name=name or "calabi-m2",
    )

    checks = sample_box(domain, 6, seed=11)
    herm = max(hermitian_metric_residual(metric, _J4, p) for p in checks)
    solres = max(gradient_soliton_residual(chart, p) for p in checks)
    if herm > 1e-10:
        raise CalibrationFailure(f"assembled metric is not Hermitian: residual {herm:.3e}")
    if solres > 1e-6:
        raise CalibrationFailure(f"assembled pair misses the soliton equation: residual {solres:.3e}")
    return chart


def dual_metric_direct(chart: CalabiChart) -> ct.MetricChart:
    """Direct assembly of the conformal dual metric: both blocks carry the
    factor exp(-4 f / (n-2)) with n = 2m, using the same closed forms."""
    params = chart.params
    n = 2 * params.m
    rate = -4.0 / (n - 2)
    core = _PotentialCore(params, chart.ell)
    comps = _metric_components_fn(params, core, chart.lambda_h, chart.fc_sign, conformal_rate=rate)
    return ct.MetricChart.from_jets(comps, 4, chart.domain, f"{chart.name}-dual-direct")
