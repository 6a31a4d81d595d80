"""Named fixtures: reference metrics, soliton pairs, and profile parameters.

Fixture metrics are analytic charts with known curvature (flat space, round
spheres in stereographic coordinates, the hyperbolic half-plane) plus the
assembled 4-dimensional soliton chart; soliton pairs attach the matching
potential.  Everything is deterministic and cheap to rebuild; the assembled
chart is cached per process.
"""

from __future__ import annotations

import math
from functools import lru_cache

from . import autodiff as ad
from . import chart as ct
from . import skrp
from .errors import UnknownFixture
from .sampling import Box
from .soliton import SolitonPair

__all__ = [
    "metric_fixture",
    "soliton_fixture",
    "skrp_fixture",
    "q_profile_fixture",
    "calabi_fixture",
    "list_fixtures",
]


def _flat(dim: int) -> ct.MetricChart:
    return ct.MetricChart.euclidean(dim, Box([-1.0] * dim, [1.0] * dim), f"euclidean{dim}")


def _round_sphere(dim: int) -> ct.MetricChart:
    """Unit round sphere in stereographic coordinates: g = 4 delta / (1+|x|^2)^2."""

    def comps(jets):
        r2 = jets[0] * jets[0]
        for j in jets[1:]:
            r2 = r2 + j * j
        conf = 4.0 / ((1.0 + r2) ** 2)
        zero = ad.constant(0.0, dim)
        return [[conf if i == k else zero for k in range(dim)] for i in range(dim)]

    return ct.MetricChart.from_jets(comps, dim, Box([-0.8] * dim, [0.8] * dim), f"sphere{dim}-stereo")


def _polar_plane() -> ct.MetricChart:
    def comps(jets):
        r, _ = jets
        zero = ad.constant(0.0, 2)
        return [[ad.constant(1.0, 2), zero], [zero, r * r]]

    return ct.MetricChart.from_jets(comps, 2, Box([1.0, 0.1], [3.0, 6.0]), "polar2")


def _hyperbolic_plane() -> ct.MetricChart:
    def comps(jets):
        _, y = jets
        conf = 1.0 / (y * y)
        zero = ad.constant(0.0, 2)
        return [[conf, zero], [zero, conf]]

    return ct.MetricChart.from_jets(comps, 2, Box([-1.0, 0.5], [1.0, 2.0]), "hyperbolic2")


def _sphere_cross_line() -> ct.MetricChart:
    def comps(jets):
        x, y, _ = jets
        conf = 4.0 / ((1.0 + x * x + y * y) ** 2)
        zero = ad.constant(0.0, 3)
        one = ad.constant(1.0, 3)
        return [[conf, zero, zero], [zero, conf, zero], [zero, zero, one]]

    return ct.MetricChart.from_jets(comps, 3, Box([-0.8, -0.8, -1.0], [0.8, 0.8, 1.0]), "sphere2xline")


def _half_square_field(dim: int, rate: float = 1.0) -> ct.ScalarField:
    def fn(jets):
        acc = jets[0] * jets[0]
        for j in jets[1:]:
            acc = acc + j * j
        return (0.5 * rate) * acc

    return ct.ScalarField(fn, dim, name=f"{rate}|x|^2/2")


_METRICS = {
    "euclidean2": lambda: _flat(2),
    "euclidean3": lambda: _flat(3),
    "euclidean4": lambda: _flat(4),
    "euclidean5": lambda: _flat(5),
    "polar2": _polar_plane,
    "sphere2-stereo": lambda: _round_sphere(2),
    "sphere3-stereo": lambda: _round_sphere(3),
    "hyperbolic2": _hyperbolic_plane,
    "sphere2xline": _sphere_cross_line,
}


def metric_fixture(name: str) -> ct.MetricChart:
    try:
        return _METRICS[name]()
    except KeyError:
        raise UnknownFixture(f"unknown metric fixture {name!r}; known: {sorted(_METRICS)}") from None


# -- profile-family parameter sets ------------------------------------------------

_SKRP = {
    # Closed-form profile over CP^1 (kappa = 4, lambda_h = 1) with the
    # branch sign matching the positive profile; calibrated a = p = s / lambda_h.
    "koiso-m2-A1B0": skrp.SkrpParams(
        m=2, kappa=4.0, c=0.0, A=1.0, B=0.0, I=(0.5, 2.5), s=2, a=2.0, p=2.0, phi_sign=+1
    ),
    # Pure-profile variant with kappa = 0 (the hand-check values phi(1) = 5/2 etc).
    "koiso-m2-A1B0-flatbase": skrp.SkrpParams(
        m=2, kappa=0.0, c=0.0, A=1.0, B=0.0, I=(0.3, 4.0), s=1, a=1.0, p=1.0
    ),
    # A + B = 0 makes the profile regular at f = c with a simple zero of Q
    # there; the second simple zero caps the interval: compact-extension case.
    "koiso-m2-compact": skrp.SkrpParams(
        m=2, kappa=4.0, c=0.0, A=1.0, B=-1.0, I=(0.0, 6.0), s=2, a=2.0, p=2.0, phi_sign=+1
    ),
    # Simple zero of Q at f = c, exponential growth to +inf: the convergent
    # dual tail makes the dual incomplete.
    "koiso-m2-tail": skrp.SkrpParams(
        m=2, kappa=4.0, c=0.0, A=-1.0, B=1.0, I=(0.0, math.inf), s=2, a=2.0, p=2.0, phi_sign=+1
    ),
    # Right endpoint is a simple zero of phi itself (not of f_c).
    "koiso-m2-capped": skrp.SkrpParams(
        m=2, kappa=1.0, c=0.0, A=1.0, B=-0.01, I=(0.05, 8.9), s=2, a=0.5, p=0.5, phi_sign=+1
    ),
    # The default branch (minus-sign constant) is consistent on
    # negative-profile intervals (here f_c < 0 with Q > 0).
    "negative-branch": skrp.SkrpParams(
        m=2, kappa=1.0, c=0.0, A=0.0, B=1.0, I=(-9.0, -2.6), s=1, a=1.0, p=1.0, phi_sign=-1
    ),
}


def skrp_fixture(name: str) -> skrp.SkrpParams:
    try:
        return _SKRP[name]
    except KeyError:
        raise UnknownFixture(f"unknown profile fixture {name!r}; known: {sorted(_SKRP)}") from None


_SYNTHETIC_Q = {
    # Simple zeros at both ends: finite length, smooth compact extension.
    "synthetic-simple-caps": lambda: skrp.QProfile(
        q=lambda f: f * (1.0 - f),
        dq=lambda f: 1.0 - 2.0 * f,
        interval=(0.0, 1.0),
        m=2,
    ),
    # Double zeros at both ends: infinite length toward each, complete.
    "synthetic-double-zero": lambda: skrp.QProfile(
        q=lambda f: (f * (1.0 - f)) ** 2,
        dq=lambda f: 2.0 * f * (1.0 - f) * (1.0 - 2.0 * f),
        interval=(0.0, 1.0),
        m=2,
    ),
}


def q_profile_fixture(name: str):
    if name in _SYNTHETIC_Q:
        return _SYNTHETIC_Q[name]()
    if name in _SKRP:
        return skrp.as_q_profile(_SKRP[name])
    known = sorted(_SYNTHETIC_Q) + sorted(_SKRP)
    raise UnknownFixture(f"unknown completeness fixture {name!r}; known: {known}")


@lru_cache(maxsize=4)
def calabi_fixture(name: str = "koiso-m2-A1B0") -> skrp.CalabiChart:
    return skrp.assemble_calabi_metric(skrp_fixture(name), name=name)


# -- soliton pairs -----------------------------------------------------------------


def _gaussian(dim: int, rate: float = 1.0) -> SolitonPair:
    return SolitonPair(_flat(dim), _half_square_field(dim, rate), f"gaussian-soliton-n{dim}")


def _cubic_pair() -> SolitonPair:
    f = ct.ScalarField(lambda jets: jets[0] ** 3, 3, "x0^3")
    return SolitonPair(_flat(3), f, "non-soliton-cubic")


_PAIRS = {
    "gaussian-soliton": lambda: _gaussian(3),
    "gaussian-soliton-n3": lambda: _gaussian(3),
    "gaussian-soliton-n4": lambda: _gaussian(4),
    "gaussian-soliton-n5": lambda: _gaussian(5),
    "sphere-trivial": lambda: SolitonPair(
        _round_sphere(3), ct.ScalarField.constant(0.0, 3), "sphere-trivial"
    ),
    "non-soliton-cubic": _cubic_pair,
}


def soliton_fixture(name: str) -> SolitonPair:
    if name in _PAIRS:
        return _PAIRS[name]()
    if name in _SKRP and name in ("koiso-m2-A1B0",):
        chart = calabi_fixture(name)
        return SolitonPair(chart.metric, chart.f_field, name)
    known = sorted(_PAIRS) + ["koiso-m2-A1B0"]
    raise UnknownFixture(f"unknown soliton fixture {name!r}; known: {known}")


def list_fixtures() -> dict[str, list[str]]:
    return {
        "metrics": sorted(_METRICS),
        "pairs": sorted(_PAIRS) + ["koiso-m2-A1B0"],
        "profiles": sorted(_SKRP),
        "completeness": sorted(_SYNTHETIC_Q) + sorted(_SKRP),
    }
