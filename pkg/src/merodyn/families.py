"""One-parameter slices of finite type meromorphic families.

Each slice is a :class:`FamilySlice`: evaluation, derivative, the free
asymptotic value (affine in the parameter), the other singular values, closed
form pole enumeration, parameter singularities, persistent cycles and
parameter-plane symmetries.  The arithmetic is delegated to the compiled
kernels in :mod:`merodyn._kernels`; this module only holds the descriptions.

Families are addressable by string id (see :func:`get_family`)::

    exp, tan, f2rho:<re,im>, pi-slice, tanh2, tanhz2, precomp
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from . import _kernels as K
from .errors import ParameterSingularity, UnknownFamily

INF = complex(math.inf, 0.0)
SINGULAR_TOL = 1e-12

SQRT_PI_I = cmath.sqrt(math.pi * 1j)  # principal branch


def is_infinite(w: complex) -> bool:
    """True when w is the point at infinity under the spherical convention."""
    return not cmath.isfinite(w) or abs(w) > K.HUGE


@dataclass(frozen=True)
class PersistentCycleSpec:
    """An attracting cycle that persists with constant multiplier."""
    points: Callable[[complex], list]
    multiplier: complex
    period: int = 1


@dataclass(frozen=True)
class SymmetrySpec:
    """A parameter-plane map under which the classification is invariant.

    When ``preserves_period`` is False the two parameters are conjugate only up
    to the sign flip z -> -z along the orbit, so periods may double or halve
    while log|multiplier| / period stays the same.
    """
    name: str
    param_map: Callable[[complex], complex]
    kind: str  # "linear" or "antilinear"
    preserves_period: bool = True


@dataclass(frozen=True)
class FamilySlice:
    name: str
    code: int
    params: tuple = ()
    free_av_coeffs: tuple = (1.0 + 0j, 0j)
    other_singular_values: tuple = ()
    parameter_singularities: tuple = ()
    persistent_cycles: tuple = ()
    symmetries: tuple = ()
    deriv_lam: Callable | None = field(default=None, compare=False)
    metadata: dict = field(default_factory=dict, compare=False)

    @cached_property
    def prm(self) -> np.ndarray:
        p = np.zeros(max(1, len(self.params)), np.complex128)
        p[: len(self.params)] = self.params
        return p

    # -- pointwise evaluation -------------------------------------------------

    def eval(self, lam, z) -> complex:
        w = K.feval(self.code, self.prm, complex(lam), complex(z))
        return INF if is_infinite(w) else w

    def deriv_z(self, lam, z) -> complex:
        return K.fderiv(self.code, self.prm, complex(lam), complex(z))

    def log_deriv_z(self, lam, z) -> complex:
        return K.flog_deriv(self.code, self.prm, complex(lam), complex(z))

    def free_av(self, lam) -> complex:
        return K.free_av(self.code, self.prm, complex(lam))

    def singular_values(self, lam) -> list:
        """Free asymptotic value first, then the others."""
        return [self.free_av(lam)] + [s(lam) for s in self.other_singular_values]

    def iterate(self, lam, z, n: int) -> complex:
        w = K.orbit_point(self.code, self.prm, complex(lam), complex(z), int(n))
        return INF if is_infinite(w) else w

    def is_singular(self, lam, tol: float = SINGULAR_TOL) -> bool:
        lam = complex(lam)
        return any(abs(lam - s) <= tol * max(1.0, abs(s))
                   for s in self.parameter_singularities)

    def check_regular(self, lam) -> None:
        if self.is_singular(lam):
            raise ParameterSingularity(f"{self.name}: lambda={lam} is a parameter singularity")

    # -- poles ----------------------------------------------------------------

    @property
    def has_poles(self) -> bool:
        return bool(K.has_poles(self.code))

    def pole(self, lam, k: int) -> complex:
        if not self.has_poles:
            raise ValueError(f"{self.name} has no poles")
        return K.pole(self.code, self.prm, complex(lam), int(k))

    def nearest_pole(self, lam, z) -> tuple[complex, int]:
        if not self.has_poles:
            return INF, 0
        p, k = K.nearest_pole(self.code, self.prm, complex(lam), complex(z))
        return p, int(k)

    def poles_near_indexed(self, lam, center, radius: float) -> list[tuple[int, complex]]:
        """All (k, p_k(lam)) with |p_k - center| <= radius, sorted by k."""
        if not self.has_poles:
            return []
        lam, c, r = complex(lam), complex(center), float(radius)
        code = self.code
        if code == K.TAN:
            lo = math.ceil((c.real - r - math.pi / 2) / math.pi)
            hi = math.floor((c.real + r - math.pi / 2) / math.pi)
            ks = range(lo, hi + 1)
        elif code in (K.F2RHO, K.PI_SLICE, K.TANH2):
            b = self.pole(lam, 0).imag
            lo = math.ceil((c.imag - r - b) / math.pi)
            hi = math.floor((c.imag + r - b) / math.pi)
            ks = range(lo, hi + 1)
        else:
            # poles are +-sqrt(w_j) with Im w_j = b + pi j
            R2 = (abs(c) + r) ** 2
            w0 = self.pole(lam, 0) ** 2
            b = w0.imag
            lo = math.ceil((-R2 - b) / math.pi)
            hi = math.floor((R2 - b) / math.pi)
            ks = [2 * j + s for j in range(lo, hi + 1) for s in (0, 1)]
        out = []
        for k in ks:
            p = self.pole(lam, k)
            if abs(p - c) <= r:
                out.append((k, p))
        return out

    def poles_near(self, lam, center, radius: float) -> list[complex]:
        return [p for _, p in self.poles_near_indexed(lam, center, radius)]

    # -- misc -----------------------------------------------------------------

    def at(self, lam):
        """The map z -> f_lam(z) as an :class:`~merodyn.schwarzian.AnalyticMap`."""
        from .schwarzian import AnalyticMap
        lam = complex(lam)
        return AnalyticMap(lambda z: self.eval(lam, z), lambda z: self.deriv_z(lam, z))

    def persistent_points(self, lam) -> list:
        return [p for c in self.persistent_cycles for p in c.points(lam)]

    def __repr__(self):
        return f"FamilySlice({self.name!r})"


def _origin(lam):
    return [0j]


def make_exponential() -> FamilySlice:
    """E(z) = e^z + lambda; entire, free asymptotic value lambda."""
    return FamilySlice(
        name="exp",
        code=K.EXP,
        symmetries=(SymmetrySpec("conj", lambda l: complex(l).conjugate(), "antilinear"),),
        deriv_lam=lambda lam, z: 1.0 + 0j,
    )


def make_tangent() -> FamilySlice:
    """T(z) = lambda tan z with asymptotic values +-lambda i."""
    return FamilySlice(
        name="tan",
        code=K.TAN,
        free_av_coeffs=(1j, 0j),
        other_singular_values=(lambda lam: -1j * complex(lam),),
        parameter_singularities=(0j,),
        symmetries=(
            SymmetrySpec("neg", lambda l: -complex(l), "linear", preserves_period=False),
            SymmetrySpec("conj", lambda l: complex(l).conjugate(), "antilinear"),
        ),
        deriv_lam=lambda lam, z: K.tan_(complex(z)),
    )


def make_fixed_multiplier_slice(rho0: complex) -> FamilySlice:
    """Slice of F_2 with the origin fixed at constant multiplier rho0.

    f(z) = (e^z - e^-z) / (e^z / lambda + e^-z / mu),  mu = rho0 lambda / (2 lambda - rho0).
    """
    rho0 = complex(rho0)
    if not 0.0 < abs(rho0) < 1.0:
        raise ValueError(f"fixed multiplier must satisfy 0 < |rho0| < 1, got {rho0}")

    def mu(lam):
        lam = complex(lam)
        return rho0 * lam / (2.0 * lam - rho0)

    syms = ()
    if rho0.imag == 0.0:
        syms = (SymmetrySpec("conj", lambda l: complex(l).conjugate(), "antilinear"),)
    fam = FamilySlice(
        name=f"f2rho:{rho0.real!r},{rho0.imag!r}",
        code=K.F2RHO,
        params=(rho0,),
        other_singular_values=(lambda lam: -mu(lam),),
        parameter_singularities=(0j, rho0 / 2.0),
        persistent_cycles=(PersistentCycleSpec(_origin, rho0, 1),),
        symmetries=syms,
        metadata={"rho0": rho0, "mu": mu},
    )
    return fam


def make_pi_slice() -> FamilySlice:
    """Origin fixed, second asymptotic value pinned at pi i (which maps to 0).

    f(z) = (e^z - e^-z) / (e^z / lambda + (i/pi) e^-z).
    """
    return FamilySlice(
        name="pi-slice",
        code=K.PI_SLICE,
        other_singular_values=(lambda lam: math.pi * 1j,),
        parameter_singularities=(0j, math.pi * 1j),
    )


def make_tanh_sq_families() -> tuple[FamilySlice, FamilySlice]:
    """lambda tanh(z)^2 and lambda tanh(z^2); origin is a superattracting fixed point."""
    conj = SymmetrySpec("conj", lambda l: complex(l).conjugate(), "antilinear")
    neg = SymmetrySpec("neg", lambda l: -complex(l), "linear")
    a = FamilySlice(
        name="tanh2",
        code=K.TANH2,
        other_singular_values=(lambda lam: 0j,),
        parameter_singularities=(0j,),
        persistent_cycles=(PersistentCycleSpec(_origin, 0j, 1),),
        symmetries=(conj, neg),
        deriv_lam=lambda lam, z: K.tanh_(complex(z)) ** 2,
    )
    b = FamilySlice(
        name="tanhz2",
        code=K.TANHZ2,
        other_singular_values=(lambda lam: 0j,),
        parameter_singularities=(0j,),
        persistent_cycles=(PersistentCycleSpec(_origin, 0j, 1),),
        symmetries=(conj,),
        deriv_lam=lambda lam, z: K.tanh_(complex(z) ** 2),
    )
    return a, b


def make_precomposed_slice() -> FamilySlice:
    """g(z) = (e^{z^2} - e^{-z^2}) / (e^{z^2} / lambda + e^{-z^2} / sqrt(pi i)).

    Asymptotic values lambda and -sqrt(pi i) (principal branch); the latter
    lands on the superattracting origin.
    """
    return FamilySlice(
        name="precomp",
        code=K.PRECOMP,
        params=(1.0 / SQRT_PI_I,),
        other_singular_values=(lambda lam: -SQRT_PI_I, lambda lam: 0j),
        parameter_singularities=(0j, -SQRT_PI_I),
        persistent_cycles=(PersistentCycleSpec(_origin, 0j, 1),),
        metadata={"sqrt_pi_i": SQRT_PI_I, "sqrt_branch": "principal"},
    )


def parse_complex(text: str) -> complex:
    """Parse the command-line convention ``re,im`` (a bare real is allowed)."""
    parts = text.split(",")
    if len(parts) == 1:
        return complex(float(parts[0]), 0.0)
    if len(parts) != 2:
        raise ValueError(f"expected 're,im', got {text!r}")
    return complex(float(parts[0]), float(parts[1]))


FAMILY_IDS = ("exp", "tan", "f2rho:<re,im>", "pi-slice", "tanh2", "tanhz2", "precomp")


def get_family(family_id: str) -> FamilySlice:
    if family_id == "exp":
        return make_exponential()
    if family_id == "tan":
        return make_tangent()
    if family_id == "pi-slice":
        return make_pi_slice()
    if family_id == "tanh2":
        return make_tanh_sq_families()[0]
    if family_id == "tanhz2":
        return make_tanh_sq_families()[1]
    if family_id == "precomp":
        return make_precomposed_slice()
    if family_id.startswith("f2rho:"):
        try:
            rho0 = parse_complex(family_id[len("f2rho:"):])
        except ValueError as exc:
            raise UnknownFamily(family_id) from exc
        return make_fixed_multiplier_slice(rho0)
    raise UnknownFamily(f"unknown family id {family_id!r}; known: {', '.join(FAMILY_IDS)}")


def all_families(rho0: complex = 2 / 3) -> list[FamilySlice]:
    a, b = make_tanh_sq_families()
    return [make_exponential(), make_tangent(), make_fixed_multiplier_slice(rho0),
            make_pi_slice(), a, b, make_precomposed_slice()]
