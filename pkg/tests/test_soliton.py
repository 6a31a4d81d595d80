"""Almost-soliton residuals, the conformal duality, and profile identities."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from soliton_lab import chart as ct
from soliton_lab import fixtures
from soliton_lab import soliton as sol
from soliton_lab.errors import (
    DimensionTooSmall,
    DomainError,
    EmptySample,
    NotASoliton,
    ZeroCrossing,
)
from soliton_lab.sampling import sample_box

GAUSSIAN = fixtures.soliton_fixture("gaussian-soliton")
SPHERE_TRIVIAL = fixtures.soliton_fixture("sphere-trivial")
CUBIC = fixtures.soliton_fixture("non-soliton-cubic")


# -- extract_coefficient ---------------------------------------------------------


def test_gaussian_coefficient_and_residual():
    c, residual = sol.extract_coefficient(GAUSSIAN, [0.4, -0.2, 0.3])
    assert c == pytest.approx(1.0, abs=1e-13)
    assert residual == pytest.approx(0.0, abs=1e-13)


def test_cubic_not_an_almost_soliton():
    _, residual = sol.extract_coefficient(CUBIC, [0.4, -0.2, 0.3])
    assert residual > 0.01


def test_sphere_trivial_coefficient_is_n_minus_one():
    c, residual = sol.extract_coefficient(SPHERE_TRIVIAL, [0.2, 0.1, -0.3])
    assert c == pytest.approx(2.0, rel=1e-10)
    assert residual < 1e-10


# -- classify -----------------------------------------------------------------------


def test_classification_of_reference_pairs():
    assert sol.classify(GAUSSIAN, 60) is sol.SolitonClass.GRADIENT_RICCI_SOLITON
    assert sol.classify(SPHERE_TRIVIAL, 60) is sol.SolitonClass.TRIVIAL
    assert sol.classify(CUBIC, 60) is sol.SolitonClass.NONE
    assert sol.classify(sol.dualize(GAUSSIAN), 60) is sol.SolitonClass.ALMOST_SOLITON


def test_classify_empty_sample():
    with pytest.raises(EmptySample):
        sol.classify(GAUSSIAN, np.empty((0, 3)))


# -- dualize -----------------------------------------------------------------------


def test_dual_metric_closed_form_gaussian():
    dual = sol.dualize(GAUSSIAN)
    p = np.array([0.4, -0.2, 0.3])
    expected = math.exp(-2.0 * float(p @ p)) * np.eye(3)
    np.testing.assert_allclose(dual.metric.matrix(p), expected, rtol=1e-14)
    assert dual.f(p) == -GAUSSIAN.f(p)


def test_dualize_identity_for_constant_potential():
    dual = sol.dualize(SPHERE_TRIVIAL)
    p = np.array([0.2, -0.1, 0.3])
    np.testing.assert_allclose(dual.metric.matrix(p), SPHERE_TRIVIAL.metric.matrix(p), rtol=1e-15)


def test_dualize_involution():
    double = sol.dualize(sol.dualize(GAUSSIAN))
    for p in sample_box(GAUSSIAN.metric.domain, 10):
        np.testing.assert_allclose(double.metric.matrix(p), GAUSSIAN.metric.matrix(p), rtol=1e-12)
        assert double.f(p) == pytest.approx(GAUSSIAN.f(p), abs=1e-14)


def test_dualize_needs_dimension_above_two():
    flat2 = fixtures.metric_fixture("euclidean2")
    pair = sol.SolitonPair(flat2, ct.ScalarField.constant(0.0, 2))
    with pytest.raises(DimensionTooSmall):
        sol.dualize(pair)
    with pytest.raises(DimensionTooSmall):
        sol.dual_coefficient(pair, [0.0, 0.0])


def test_dual_pair_is_almost_soliton():
    dual = sol.dualize(GAUSSIAN)
    report = sol.residual_report(dual, GAUSSIAN.sample(60))
    assert report.max_residual < 1e-8
    assert report.coefficient_variation > 0.1  # genuinely almost, not genuine


# -- dual_coefficient ------------------------------------------------------------------


def test_dual_coefficient_spot_value_at_origin():
    # exp(0) * (1 + 2 * (3 - 0)) with unit coefficient and trace 3.
    assert sol.dual_coefficient(GAUSSIAN, np.zeros(3), "direct") == pytest.approx(7.0, abs=1e-12)
    assert sol.dual_coefficient(GAUSSIAN, np.zeros(3), "closed") == pytest.approx(7.0, abs=1e-12)


def test_dual_coefficient_trivial_potential_reduces_to_source():
    p = np.array([0.2, -0.1, 0.3])
    c, _ = sol.extract_coefficient(SPHERE_TRIVIAL, p)
    assert sol.dual_coefficient(SPHERE_TRIVIAL, p, "direct") == pytest.approx(c, rel=1e-12)


def test_dual_coefficient_methods_agree_and_match_extraction():
    dual = sol.dualize(GAUSSIAN)
    for p in sample_box(GAUSSIAN.metric.domain, 20):
        direct = sol.dual_coefficient(GAUSSIAN, p, "direct")
        closed = sol.dual_coefficient(GAUSSIAN, p, "closed")
        assert direct == pytest.approx(closed, rel=1e-10)
        extracted, _ = sol.extract_coefficient(dual, p)
        assert extracted == pytest.approx(direct, rel=1e-8)


def test_dual_coefficient_refuses_non_soliton_points():
    with pytest.raises(NotASoliton):
        sol.dual_coefficient(CUBIC, [0.4, 0.1, -0.2])


def test_dual_coefficient_unknown_method():
    with pytest.raises(ValueError):
        sol.dual_coefficient(GAUSSIAN, np.zeros(3), "mystery")


# -- hamilton invariant / steady obstruction ----------------------------------------------


def test_hamilton_invariant_gaussian_constant_three():
    for p in sample_box(GAUSSIAN.metric.domain, 10):
        assert sol.hamilton_invariant(GAUSSIAN, 1.0, p) == pytest.approx(3.0, abs=1e-12)


def test_hamilton_invariant_sphere_zero():
    for p in sample_box(SPHERE_TRIVIAL.metric.domain, 5):
        assert sol.hamilton_invariant(SPHERE_TRIVIAL, 2.0, p) == pytest.approx(0.0, abs=1e-10)


def test_hamilton_invariant_dual_not_constant():
    dual = sol.dualize(GAUSSIAN)
    points = sample_box(GAUSSIAN.metric.domain, 40)
    coeffs = [sol.extract_coefficient(dual, p)[0] for p in points]
    values = [sol.hamilton_invariant(dual, float(np.mean(coeffs)), p) for p in points]
    variation = (max(values) - min(values)) / (1.0 + max(abs(v) for v in values))
    assert variation > 0.1


def test_steady_obstruction_values():
    p = np.array([0.4, -0.2, 0.3])
    flat_const = sol.SolitonPair(fixtures.metric_fixture("euclidean3"), ct.ScalarField.constant(2.0, 3))
    assert sol.steady_obstruction(flat_const, p) == pytest.approx(0.0, abs=1e-13)
    assert sol.steady_obstruction(GAUSSIAN, p) == pytest.approx(-2.0 * GAUSSIAN.f(p), abs=1e-12)
    assert sol.steady_obstruction(SPHERE_TRIVIAL, p) == pytest.approx(-6.0, rel=1e-10)


# -- old_dualize -----------------------------------------------------------------------


def _shifted_gaussian():
    metric = fixtures.metric_fixture("euclidean3")
    f = ct.ScalarField(lambda j: 1.0 + 0.5 * (j[0] * j[0] + j[1] * j[1] + j[2] * j[2]), 3)
    return sol.SolitonPair(metric, f, "shifted")


def test_old_dualize_constant_one_fixed_point():
    pair = sol.SolitonPair(fixtures.metric_fixture("euclidean3"), ct.ScalarField.constant(1.0, 3))
    image = sol.old_dualize(pair)
    p = np.array([0.3, 0.2, -0.1])
    np.testing.assert_allclose(image.metric.matrix(p), pair.metric.matrix(p), rtol=1e-15)
    assert image.f(p) == pytest.approx(1.0)


def test_old_dualize_involution():
    pair = _shifted_gaussian()
    double = sol.old_dualize(sol.old_dualize(pair))
    for p in sample_box(pair.metric.domain, 8):
        np.testing.assert_allclose(double.metric.matrix(p), pair.metric.matrix(p), rtol=1e-12)
        assert double.f(p) == pytest.approx(pair.f(p), abs=1e-12)


def test_old_dualize_rejects_vanishing_potential():
    with pytest.raises(ZeroCrossing):
        sol.old_dualize(GAUSSIAN)  # potential vanishes at the origin


# -- ricci_hessian_fit ---------------------------------------------------------------


def test_fit_degenerate_on_gaussian():
    fit = sol.ricci_hessian_fit(GAUSSIAN, [0.3, -0.2, 0.1])
    assert not fit.alpha_identifiable
    assert fit.residual < 1e-12


def test_fit_exact_but_trivial_on_ricci_flat_cubic():
    # Flat metric: ric = 0, so alpha = c = 0 fits exactly whatever f is.
    fit = sol.ricci_hessian_fit(CUBIC, [0.4, 0.1, -0.2])
    assert fit.residual < 1e-12
    assert fit.alpha == pytest.approx(0.0, abs=1e-12)


def test_fit_detects_failure_on_non_einstein_pair():
    prod = fixtures.metric_fixture("sphere2xline")
    f = ct.ScalarField(lambda j: j[0] ** 3, 3, "x0^3")
    fit = sol.ricci_hessian_fit(sol.SolitonPair(prod, f), [0.4, 0.1, -0.2])
    assert fit.residual > 0.01


def test_fit_alpha_one_on_assembled_chart(koiso_chart):
    pair = sol.SolitonPair(koiso_chart.metric, koiso_chart.f_field)
    for p in sample_box(koiso_chart.domain, 5, seed=2):
        fit = sol.ricci_hessian_fit(pair, p)
        assert fit.alpha_identifiable
        assert fit.alpha == pytest.approx(1.0, abs=1e-6)
        assert fit.residual < 1e-6


# -- profile identities ------------------------------------------------------------------


@given(st.floats(-2.0, 2.0), st.integers(3, 6))
@settings(max_examples=80, deadline=None)
def test_canonical_profile_zeroes_residuals(f, n):
    r1, r2 = sol.uniqueness_residuals(sol.canonical_profile(n), n, f)
    assert abs(r1) < 1e-12
    assert abs(r2) < 1e-12


def test_canonical_profile_constants_allowed():
    n = 4
    base = sol.canonical_profile(n)
    shifted = sol.ProfilePair(
        tau=ct.SmoothFunction1D(
            lambda f: 3.0 * base.tau.value(f),
            lambda f: 3.0 * base.tau.deriv(f),
            lambda f: 3.0 * base.tau.deriv2(f),
        ),
        k=ct.SmoothFunction1D(lambda f: -f + 5.0, lambda f: -1.0, lambda f: 0.0),
    )
    r1, r2 = sol.uniqueness_residuals(shifted, n, 0.7)
    assert abs(r1) < 1e-12 and abs(r2) < 1e-12


def test_wrong_exponent_profile_fails_for_off_dimension():
    tau = ct.SmoothFunction1D(math.exp, math.exp, math.exp)
    k = ct.SmoothFunction1D(lambda f: -f, lambda f: -1.0, lambda f: 0.0)
    profile = sol.ProfilePair(tau, k)
    # exp(f) is canonical exactly in dimension 4 and in no other.
    assert sol.uniqueness_residuals(profile, 4, 0.7) == pytest.approx((0.0, 0.0))
    r1, r2 = sol.uniqueness_residuals(profile, 5, 0.7)
    assert r1 == pytest.approx(1.0)
    assert r2 == pytest.approx(1.0)


def test_uniqueness_requires_positive_tau():
    tau = ct.SmoothFunction1D(lambda f: -1.0, lambda f: 0.0, lambda f: 0.0)
    k = ct.SmoothFunction1D(lambda f: -f, lambda f: -1.0, lambda f: 0.0)
    with pytest.raises(DomainError):
        sol.uniqueness_residuals(sol.ProfilePair(tau, k), 4, 0.0)


def test_nonhermitian_coefficient_values():
    n = 4
    rate = -2.0 / (n - 2)
    decaying = ct.SmoothFunction1D(
        lambda f: math.exp(rate * f),
        lambda f: rate * math.exp(rate * f),
        lambda f: rate * rate * math.exp(rate * f),
    )
    for f in np.linspace(-2, 2, 9):
        assert sol.nonhermitian_coefficient(decaying, n, f) == pytest.approx(0.0, abs=1e-13)
    growing = ct.SmoothFunction1D(math.exp, math.exp, math.exp)
    assert sol.nonhermitian_coefficient(growing, 4, 0.0) == pytest.approx(4.0)
    constant = ct.SmoothFunction1D(lambda f: 1.0, lambda f: 0.0, lambda f: 0.0)
    assert sol.nonhermitian_coefficient(constant, 5, 0.3) == 0.0
