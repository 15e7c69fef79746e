"""Schwarzian derivative with an analytic first-derivative oracle.

Only f' is required.  f'' and f''' are central differences of f' taken along
both the real and the imaginary direction.  For holomorphic f' the h^2 error
terms of the two directions cancel, and one Richardson step against 2h removes
the h^4 term.  Differencing f itself would lose too many digits.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass
from typing import Callable

from .errors import SingularPoint

CRITICAL_TOL = 1e-12
STEP = 1e-3


@dataclass(frozen=True)
class AnalyticMap:
    """A holomorphic map together with its derivative."""
    f: Callable[[complex], complex]
    df: Callable[[complex], complex]

    def __call__(self, z):
        return self.f(z)

    def compose(self, inner: "AnalyticMap") -> "AnalyticMap":
        """self o inner, with the chain rule for the derivative."""
        return AnalyticMap(lambda z: self.f(inner.f(z)),
                           lambda z: self.df(inner.f(z)) * inner.df(z))

    def precompose_affine(self, a: complex, b: complex = 0j) -> "AnalyticMap":
        return self.compose(AnalyticMap(lambda z: a * z + b, lambda z: a))


def _d1_d2(df, z, h):
    fp, fm = df(z + h), df(z - h)
    gp, gm = df(z + 1j * h), df(z - 1j * h)
    return ((fp - fm) - 1j * (gp - gm)) / (4 * h), (fp + fm - gp - gm) / (2 * h * h)


def schwarzian(f, z, df=None, step: float = STEP) -> complex:
    """S(f)(z) = (f''/f')' - (f''/f')^2 / 2.

    ``f`` is an :class:`AnalyticMap`, or pass the derivative as ``df``.  The
    stencil reaches ``2 * step * max(1, |z|)`` from z and must stay clear of
    poles and critical points.
    """
    if df is None:
        df = f.df
    z = complex(z)
    f1 = df(z)
    if not cmath.isfinite(f1) or abs(f1) < CRITICAL_TOL:
        raise SingularPoint(f"f'({z}) = {f1}: critical point or pole")
    h = step * max(1.0, abs(z))
    b2, b3 = _d1_d2(df, z, h)
    a2, a3 = _d1_d2(df, z, 2 * h)
    f2 = b2 + (b2 - a2) / 15.0
    f3 = b3 + (b3 - a3) / 15.0
    r = f2 / f1
    return f3 / f1 - 1.5 * r * r


def check_cocycle(g: AnalyticMap, f: AnalyticMap, z) -> float:
    """|S(g o f) - S(g)(f(z)) f'(z)^2 - S(f)(z)|."""
    lhs = schwarzian(g.compose(f), z)
    rhs = schwarzian(g, f(z)) * f.df(z) ** 2 + schwarzian(f, z)
    return abs(lhs - rhs)


@dataclass(frozen=True)
class F2Map(AnalyticMap):
    """g(z) = (a e^z + b) / (c e^z + d) with ad - bc = 1."""
    coeffs: tuple = (1, 0, 0, 1)

    @property
    def asymptotic_values(self) -> tuple[complex, complex]:
        """(limit as Re z -> +inf, limit as Re z -> -inf); inf when a divisor vanishes."""
        a, b, c, d = self.coeffs
        inf = complex(float("inf"), 0.0)
        return (a / c if c != 0 else inf, b / d if d != 0 else inf)


def f2_normal_form(a, b, c, d, tol: float = 1e-12) -> F2Map:
    a, b, c, d = (complex(x) for x in (a, b, c, d))
    det = a * d - b * c
    if abs(det - 1.0) > tol:
        raise ValueError(f"normal form requires ad - bc = 1, got {det}")

    def f(z):
        z = complex(z)
        if z.real > 0:
            q = cmath.exp(-z)
            return (a + b * q) / (c + d * q)
        e = cmath.exp(z)
        return (a * e + b) / (c * e + d)

    def df(z):
        z = complex(z)
        if z.real > 0:
            q = cmath.exp(-z)
            return q / (c + d * q) ** 2
        e = cmath.exp(z)
        return e / (c * e + d) ** 2

    return F2Map(f, df, (a, b, c, d))


identity = AnalyticMap(lambda z: z, lambda z: 1.0 + 0j)
exponential = AnalyticMap(cmath.exp, cmath.exp)


def mobius(a, b, c, d) -> AnalyticMap:
    det = a * d - b * c
    return AnalyticMap(lambda z: (a * z + b) / (c * z + d),
                       lambda z: det / (c * z + d) ** 2)
