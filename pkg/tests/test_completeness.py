"""Improper integrals, endpoint classification, and completeness verdicts."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from soliton_lab import completeness as comp
from soliton_lab import fixtures, skrp
from soliton_lab.errors import (
    DomainError,
    DomainExit,
    NonpositiveQ,
    OscillationDetected,
    ToleranceAmbiguity,
)

EC = comp.EndpointClass
OV = comp.OverallVerdict


# -- arc integrand ------------------------------------------------------------------


def test_arc_integrand_unit_profile():
    profile = skrp.QProfile(q=lambda f: 1.0, dq=lambda f: 0.0, interval=(-1.0, 1.0), m=2)
    assert comp.arc_integrand(profile, 0.0) == 1.0


def test_arc_integrand_hand_value():
    params = fixtures.skrp_fixture("koiso-m2-A1B0-flatbase")
    assert comp.arc_integrand(params, 1.0) == pytest.approx(math.exp(-1.0) / math.sqrt(5.0), rel=1e-14)


def test_arc_integrand_shift_scaling():
    # Shifting f by dc with Q carried along rescales by exp(-2 dc / (n-2)).
    profile = skrp.QProfile(q=lambda f: 2.0 + math.sin(f), dq=lambda f: math.cos(f), interval=(-9.0, 9.0), m=2)
    dc = 0.8
    shifted = skrp.QProfile(q=lambda f: profile.q(f - dc), dq=lambda f: profile.dq(f - dc), interval=(-8.0, 8.0), m=2)
    f0 = 0.4
    ratio = comp.arc_integrand(shifted, f0 + dc) / comp.arc_integrand(profile, f0)
    assert ratio == pytest.approx(math.exp(-dc), rel=1e-13)


def test_arc_integrand_rejects_nonpositive_q():
    profile = skrp.QProfile(q=lambda f: -1.0, dq=lambda f: 0.0, interval=(-1.0, 1.0), m=2)
    with pytest.raises(NonpositiveQ):
        comp.arc_integrand(profile, 0.0)


# -- improper_integral -------------------------------------------------------------------


@pytest.mark.parametrize("p,expected", [(-0.5, 2.0), (-0.9, 10.0), (-0.1, 1.0 / 0.9)])
def test_integrable_power_values(p, expected):
    result = comp.improper_integral(lambda f: f**p, 0.0, 1.0)
    assert result.converged
    assert result.value == pytest.approx(expected, abs=1e-8)


@pytest.mark.parametrize("p", [-1.0, -1.5, -2.0])
def test_divergent_powers_detected(p):
    result = comp.improper_integral(lambda f: f**p, 0.0, 1.0)
    assert result.diverges
    if p == -1.0:
        assert result.rate == "log"
    else:
        assert f"{p:.2f}" in result.rate


def test_divergence_rate_increments_nondecreasing():
    result = comp.improper_integral(lambda f: f**-1.5, 0.0, 1.0)
    incs = result.increments
    assert all(b >= a for a, b in zip(incs[:-1], incs[1:]))


def test_upper_endpoint_singularity():
    result = comp.improper_integral(lambda f: (1.0 - f) ** -0.5, 0.0, 1.0, singular_end="upper")
    assert result.converged
    assert result.value == pytest.approx(2.0, abs=1e-8)


def test_improper_integral_bad_bounds():
    with pytest.raises(DomainError):
        comp.improper_integral(lambda f: 1.0, 1.0, 0.0)


def test_oscillation_guard():
    with pytest.raises(OscillationDetected):
        comp.improper_integral(lambda f: -1.0, 0.0, 1.0)


# -- exponent_fit ---------------------------------------------------------------------------


@pytest.mark.parametrize("p,tol", [(-0.5, 0.01), (-1.5, 0.01)])
def test_exponent_fit_recovers_powers(p, tol):
    fit = comp.exponent_fit(lambda f: f**p, 0.0)
    assert fit.exponent == pytest.approx(p, abs=tol)
    lo, hi = fit.confidence
    assert lo <= p <= hi


# -- classify_endpoint ------------------------------------------------------------------------


def test_simple_zero_is_smooth_cap():
    profile = skrp.QProfile(q=lambda f: f, dq=lambda f: 1.0, interval=(0.0, 1.0), m=2)
    analysis = comp.classify_endpoint(profile, 0.0)
    assert analysis.cls is EC.SMOOTH_CAP
    assert analysis.exponent.exponent == pytest.approx(-0.5, abs=0.05)
    assert analysis.integral.converged


def test_double_zero_is_infinite_end():
    profile = skrp.QProfile(q=lambda f: f * f, dq=lambda f: 2.0 * f, interval=(0.0, 1.0), m=2)
    analysis = comp.classify_endpoint(profile, 0.0)
    assert analysis.cls is EC.INFINITE_END
    assert analysis.exponent.exponent == pytest.approx(-1.0, abs=0.05)
    assert analysis.integral.diverges


def test_positive_q_is_interior_boundary():
    profile = skrp.QProfile(q=lambda f: 1.0 + f, dq=lambda f: 1.0, interval=(0.0, 1.0), m=2)
    assert comp.classify_endpoint(profile, 0.0).cls is EC.INTERIOR


def test_capped_profile_smooth_cap_at_phi_root():
    # Right endpoint where the profile itself crosses zero (simple).
    params = fixtures.skrp_fixture("koiso-m2-capped")
    intervals = skrp.q_domain(params)
    hi = intervals[0][1]
    assert 8.0 < hi < 8.9  # root of phi located by bracketing
    analysis = comp.classify_endpoint(params, hi, side="sup")
    assert analysis.cls is EC.SMOOTH_CAP
    assert analysis.exponent.exponent == pytest.approx(-0.5, abs=0.05)


def test_tolerance_ambiguity_is_surfaced():
    eps = 3e-9  # within a factor 10 of the 1e-9-scaled zero tolerance
    profile = skrp.QProfile(q=lambda f: f * f + eps * f, dq=lambda f: 2.0 * f + eps, interval=(0.0, 1.0), m=2)
    with pytest.raises(ToleranceAmbiguity):
        comp.classify_endpoint(profile, 0.0)


# -- infinite range ---------------------------------------------------------------------------


def test_tail_converges_and_matches_asymptote():
    params = fixtures.skrp_fixture("koiso-m2-tail")
    analysis = comp.infinite_range_test(params)
    assert analysis.cls is EC.INFINITE_RANGE_CONVERGENT
    assert analysis.integral.converged and analysis.integral.value > 0
    ratios = analysis.evidence["asymptote_log_ratio"]
    # log-ratio settles to a constant: measured / asymptote -> positive limit
    assert abs(ratios[-1] - ratios[-2]) < 1e-3
    assert math.isfinite(analysis.evidence["asymptote_ratio_limit"])
    assert analysis.evidence["asymptote_ratio_limit"] > 0


def test_tail_asymptote_exponent_pair_m2():
    params = fixtures.skrp_fixture("koiso-m2-tail")
    u = 0.05
    # exp((-1/(m-1) - 1/2)/u) * u^{-((m-1)/2 + 2)}: coefficients -3/2 and -5/2.
    expected = -1.5 / u - 2.5 * math.log(u)
    assert comp.tail_log_asymptote(params, u) == pytest.approx(expected, rel=1e-14)


def test_tail_log_integrand_consistent_with_direct_evaluation():
    params = fixtures.skrp_fixture("koiso-m2-tail")
    for u in (0.2, 0.05, 0.01):
        f = params.c + 1.0 / u
        direct = math.log(comp.arc_integrand(params, f)) + 2.0 * math.log(1.0 / u)
        assert comp.tail_log_integrand(params, u) == pytest.approx(direct, rel=1e-12)


def test_infinite_range_requires_unbounded_interval():
    with pytest.raises(DomainError):
        comp.infinite_range_test(fixtures.skrp_fixture("koiso-m2-compact"))


# -- verdicts ---------------------------------------------------------------------------------


def test_verdict_compact_extension():
    verdict = comp.completeness_verdict(fixtures.q_profile_fixture("koiso-m2-compact"))
    assert verdict.lower.cls is EC.SMOOTH_CAP
    assert verdict.upper.cls is EC.SMOOTH_CAP
    assert verdict.overall is OV.COMPLETE_COMPACT_EXTENSION


def test_verdict_synthetic_simple_caps():
    verdict = comp.completeness_verdict(fixtures.q_profile_fixture("synthetic-simple-caps"))
    assert verdict.overall is OV.COMPLETE_COMPACT_EXTENSION


def test_verdict_double_zero_complete():
    verdict = comp.completeness_verdict(fixtures.q_profile_fixture("synthetic-double-zero"))
    assert verdict.lower.cls is EC.INFINITE_END
    assert verdict.upper.cls is EC.INFINITE_END
    assert verdict.overall is OV.COMPLETE


def test_verdict_exponential_tail_incomplete():
    verdict = comp.completeness_verdict(fixtures.q_profile_fixture("koiso-m2-tail"))
    assert verdict.lower.cls is EC.SMOOTH_CAP
    assert verdict.upper.cls is EC.INFINITE_RANGE_CONVERGENT
    assert verdict.overall is OV.INCOMPLETE


def test_verdict_window_cut_is_inconclusive():
    params = skrp.SkrpParams(
        m=2, kappa=4.0, c=0.0, A=1.0, B=1.0, I=(0.5, math.inf), s=2, a=2.0, p=2.0, phi_sign=+1
    )
    verdict = comp.completeness_verdict(params)
    assert verdict.lower.cls is EC.INTERIOR
    assert verdict.overall is OV.INCONCLUSIVE_AT_END


def test_verdict_mixed_cap_and_infinite_end():
    profile = skrp.QProfile(
        q=lambda f: f * (1.0 - f) ** 2,
        dq=lambda f: (1.0 - f) ** 2 - 2.0 * f * (1.0 - f),
        interval=(0.0, 1.0),
        m=2,
    )
    verdict = comp.completeness_verdict(profile)
    assert verdict.lower.cls is EC.SMOOTH_CAP
    assert verdict.upper.cls is EC.INFINITE_END
    assert verdict.overall is OV.COMPLETE


# -- u-substitution identity -------------------------------------------------------------------


@pytest.mark.parametrize("upper", [10.0, 1e3])
def test_u_substitution_identity_smooth_integrand(upper):
    integrand = lambda f: math.exp(-0.4 * f) / (1.0 + f * f)
    direct = quad(integrand, 1.0, upper, epsabs=1e-13, epsrel=1e-12, limit=400)[0]
    assert comp.u_substituted_integral(integrand, 1.0, upper) == pytest.approx(direct, abs=1e-8)


def test_u_substitution_identity_arc_integrand():
    params = fixtures.skrp_fixture("koiso-m2-tail")
    integrand = lambda f: comp.arc_integrand(params, f)
    direct = quad(integrand, 1.0, 40.0, epsabs=1e-14, epsrel=1e-13, limit=400)[0]
    assert comp.u_substituted_integral(integrand, 1.0, 40.0, c=params.c) == pytest.approx(direct, rel=1e-8)


# -- flow-length cross-check --------------------------------------------------------------------


def test_flow_length_matches_profile_integral(koiso_chart):
    f1, f2 = koiso_chart.fiber_level_range(margin=0.02)
    flow = comp.gradient_flow_length_crosscheck(koiso_chart, f1, f2)
    reduced = quad(
        lambda f: comp.arc_integrand(koiso_chart.params, f), f1, f2, epsabs=1e-13, epsrel=1e-12
    )[0]
    assert flow == pytest.approx(reduced, rel=1e-6)


def test_flow_length_symmetric_and_zero(koiso_chart):
    f1, f2 = koiso_chart.fiber_level_range(margin=0.05)
    forward = comp.gradient_flow_length_crosscheck(koiso_chart, f1, f2)
    backward = comp.gradient_flow_length_crosscheck(koiso_chart, f2, f1)
    assert forward == pytest.approx(backward, rel=1e-12)
    assert comp.gradient_flow_length_crosscheck(koiso_chart, f1, f1) == 0.0


def test_flow_exits_domain(koiso_chart):
    lo, hi = koiso_chart.f_window
    with pytest.raises(DomainExit):
        comp.gradient_flow_length_crosscheck(koiso_chart, lo - 0.4, hi)


def test_lower_infinite_end_divergent():
    # Constant Q: the conformal factor grows toward -inf, infinite length.
    profile = skrp.QProfile(q=lambda f: 1.0, dq=lambda f: 0.0, interval=(-math.inf, 0.0), m=2)
    verdict = comp.completeness_verdict(profile)
    assert verdict.lower.cls is EC.INFINITE_RANGE_DIVERGENT
    assert verdict.upper.cls is EC.INTERIOR  # window edge with Q > 0
    assert verdict.overall is OV.INCONCLUSIVE_AT_END


def test_lower_infinite_end_convergent():
    # Q growing like exp(-4f) overwhelms the conformal factor: finite length.
    profile = skrp.QProfile(
        q=lambda f: math.exp(-4.0 * f), dq=lambda f: -4.0 * math.exp(-4.0 * f), interval=(-math.inf, 0.0), m=2
    )
    verdict = comp.completeness_verdict(profile)
    assert verdict.lower.cls is EC.INFINITE_RANGE_CONVERGENT
