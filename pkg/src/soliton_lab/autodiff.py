"""Second-order forward-mode automatic differentiation.

A :class:`Jet` carries a value together with its full gradient and Hessian
with respect to a fixed set of chart coordinates, i.e. a degree-2 Taylor
expansion.  Arithmetic on jets propagates both derivative orders exactly
(to roundoff), which is what curvature computations need: the Ricci tensor
consumes two derivative orders of the metric components, so finite
differences alone cannot reach the residual tolerances used in the tests.

Central finite differences are kept in this module only as an independent
oracle (:func:`fd_gradient`, :func:`fd_hessian`) against which every field's
reported derivatives are cross-checked.
"""

from __future__ import annotations

import math
import numbers
from collections.abc import Callable, Sequence

import numpy as np

__all__ = [
    "Jet",
    "seed",
    "constant",
    "lift_univariate",
    "jet_exp",
    "jet_log",
    "jet_sqrt",
    "fd_gradient",
    "fd_hessian",
]


class Jet:
    """Truncated second-order Taylor expansion of a scalar in n variables.

    Attributes
    ----------
    val : float
        Function value.
    grad : ndarray, shape (n,)
        First partial derivatives.
    hess : ndarray, shape (n, n)
        Second partial derivatives; symmetric by construction.
    """

    __slots__ = ("val", "grad", "hess")

    def __init__(self, val: float, grad: np.ndarray, hess: np.ndarray):
        self.val = float(val)
        self.grad = grad
        self.hess = hess

    @property
    def nvars(self) -> int:
        return self.grad.shape[0]

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val + other.val, self.grad + other.grad, self.hess + other.hess)
        if isinstance(other, numbers.Real):
            return Jet(self.val + other, self.grad, self.hess)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.val, -self.grad, -self.hess)

    def __sub__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val - other.val, self.grad - other.grad, self.hess - other.hess)
        if isinstance(other, numbers.Real):
            return Jet(self.val - other, self.grad, self.hess)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, numbers.Real):
            return Jet(other - self.val, -self.grad, -self.hess)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, Jet):
            cross = np.outer(self.grad, other.grad)
            return Jet(
                self.val * other.val,
                self.val * other.grad + other.val * self.grad,
                self.val * other.hess + other.val * self.hess + cross + cross.T,
            )
        if isinstance(other, numbers.Real):
            return Jet(self.val * other, self.grad * other, self.hess * other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other._reciprocal()
        if isinstance(other, numbers.Real):
            return self * (1.0 / other)
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, numbers.Real):
            return self._reciprocal() * other
        return NotImplemented

    def _reciprocal(self) -> "Jet":
        inv = 1.0 / self.val
        return lift_univariate(self, inv, -inv * inv, 2.0 * inv * inv * inv)

    def __pow__(self, exponent):
        if not isinstance(exponent, numbers.Real):
            return NotImplemented
        p = float(exponent)
        if p == 0:
            return constant(1.0, self.nvars)
        v = self.val**p
        return lift_univariate(self, v, p * self.val ** (p - 1), p * (p - 1) * self.val ** (p - 2))

    def __repr__(self):  # pragma: no cover - debugging aid
        return f"Jet(val={self.val!r}, grad={self.grad!r})"


def seed(coords: Sequence[float]) -> list[Jet]:
    """Return jets for the coordinate functions at the given point."""
    x = np.asarray(coords, dtype=float)
    n = x.shape[0]
    jets = []
    for i in range(n):
        g = np.zeros(n)
        g[i] = 1.0
        jets.append(Jet(x[i], g, np.zeros((n, n))))
    return jets


def constant(value: float, nvars: int) -> Jet:
    """Jet of a constant in ``nvars`` variables."""
    return Jet(value, np.zeros(nvars), np.zeros((nvars, nvars)))


def lift_univariate(x: Jet, value: float, deriv1: float, deriv2: float) -> Jet:
    """Compose a scalar function (given by its 2-jet at ``x.val``) with ``x``.

    This is the chain rule through second order and is the extension point
    for primitives that have no closed form in coordinates (for example a
    potential defined by inverting a quadrature).
    """
    outer = np.outer(x.grad, x.grad)
    return Jet(value, deriv1 * x.grad, deriv1 * x.hess + deriv2 * outer)


def jet_exp(x: Jet | float):
    if isinstance(x, Jet):
        v = math.exp(x.val)
        return lift_univariate(x, v, v, v)
    return math.exp(x)


def jet_log(x: Jet | float):
    if isinstance(x, Jet):
        inv = 1.0 / x.val
        return lift_univariate(x, math.log(x.val), inv, -inv * inv)
    return math.log(x)


def jet_sqrt(x: Jet | float):
    if isinstance(x, Jet):
        v = math.sqrt(x.val)
        return lift_univariate(x, v, 0.5 / v, -0.25 / (v * v * v))
    return math.sqrt(x)


# -- finite-difference oracle -----------------------------------------------

_EPS = np.finfo(float).eps


def fd_gradient(func: Callable[[np.ndarray], float], x: np.ndarray) -> np.ndarray:
    """Central-difference gradient with step h = cbrt(eps) * (1 + |x_i|)."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    grad = np.empty(n)
    for i in range(n):
        h = _EPS ** (1.0 / 3.0) * (1.0 + abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        grad[i] = (func(xp) - func(xm)) / (2.0 * h)
    return grad


def fd_hessian(func: Callable[[np.ndarray], float], x: np.ndarray) -> np.ndarray:
    """Central-difference Hessian; step calibrated to eps**(1/4) for second
    differences (the cbrt step optimal for gradients is too small here)."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    hess = np.empty((n, n))
    steps = [_EPS**0.25 * (1.0 + abs(x[i])) for i in range(n)]
    f0 = func(x)
    for i in range(n):
        hi = steps[i]
        xp, xm = x.copy(), x.copy()
        xp[i] += hi
        xm[i] -= hi
        hess[i, i] = (func(xp) - 2.0 * f0 + func(xm)) / (hi * hi)
        for j in range(i + 1, n):
            hj = steps[j]
            xpp, xpm, xmp, xmm = x.copy(), x.copy(), x.copy(), x.copy()
            xpp[[i, j]] += [hi, hj]
            xpm[i] += hi
            xpm[j] -= hj
            xmp[i] -= hi
            xmp[j] += hj
            xmm[[i, j]] -= [hi, hj]
            val = (func(xpp) - func(xpm) - func(xmp) + func(xmm)) / (4.0 * hi * hj)
            hess[i, j] = hess[j, i] = val
    return hess
