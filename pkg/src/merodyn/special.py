"""Parameter-space Newton solvers: virtual cycle and Misiurewicz parameters."""
from __future__ import annotations

import cmath
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels as K
from .errors import FamilyHasNoPoles, NoConvergence, NotRepelling, OrbitThroughPole
from .families import FamilySlice, is_infinite

NEWTON_MAXIT = 50
MAX_HALVINGS = 8
VC_TOL = 1e-11
MIS_TOL = 1e-11
# an intermediate orbit point this close to a pole means the order is too high
THROUGH_POLE = 1e-6
DIVERGED = 1e8
EPS = 2.220446049250313e-16
ROOT_SPREAD = 1e-8


def _fd_step(lam: complex) -> float:
    return 1e-7 * max(1.0, abs(lam))


@dataclass(frozen=True)
class VirtualCycleHit:
    lam: complex
    order: int
    pole_index: int
    residual: float
    iterations: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lam"] = [self.lam.real, self.lam.imag]
        d["type"] = "VirtualCycleHit"
        return d


@dataclass(frozen=True)
class MisiurewiczHit:
    lam: complex
    m: int
    n: int
    sv_index: int
    residual: float
    repelling_check: float
    iterations: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lam"] = [self.lam.real, self.lam.imag]
        d["type"] = "MisiurewiczHit"
        return d


class _Infinite(Exception):
    pass


def _newton(F, dF, lam, maxit, tol, small_step=None):
    """Damped Newton.  F raises _Infinite where it is not finite.

    With ``small_step`` the last accepted step must also be that small
    (relative to |lam|); this stops runs that lower |F| by sliding to infinity.
    """
    lam = complex(lam)
    Fv = F(lam)
    step_size = math.inf
    for it in range(maxit + 1):
        if abs(Fv) < tol and (small_step is None or step_size <= small_step * max(1.0, abs(lam))):
            return lam, abs(Fv), it
        if it == maxit:
            break
        d = dF(lam)
        if d == 0 or not cmath.isfinite(d):
            raise NoConvergence(f"zero or infinite derivative at lambda={lam}")
        step = Fv / d
        t = 1.0
        for _ in range(MAX_HALVINGS + 1):
            cand = lam - t * step
            try:
                Fc = F(cand)
            except _Infinite:
                Fc = None
            if Fc is not None and cmath.isfinite(Fc) and abs(Fc) < abs(Fv):
                break
            t *= 0.5
        else:
            # no decrease left: accept only if already converged
            if abs(Fv) < tol and (small_step is None
                                  or abs(step) <= small_step * max(1.0, abs(lam))):
                return lam, abs(Fv), it
            raise NoConvergence(f"damped Newton stalled at lambda={lam}, |F|={abs(Fv):.3g}")
        step_size = abs(t * step)
        lam, Fv = cand, Fc
        if abs(lam) > DIVERGED:
            raise NoConvergence(f"Newton iterate diverged (|lambda| = {abs(lam):.3g})")
    raise NoConvergence(f"no convergence in {maxit} steps (|F| = {abs(Fv):.3g} at {lam})")


def _orbit_with_derivative(family: FamilySlice, lam: complex, z: complex, dz: complex, n: int):
    """Points f^j(z), j = 0..n, with d/dlam along the orbit (analytic deriv_lam)."""
    pts, ders = [z], [dz]
    for _ in range(n):
        dz = family.deriv_z(lam, z) * dz + family.deriv_lam(lam, z)
        z = K.feval(family.code, family.prm, lam, z)
        if is_infinite(z):
            raise _Infinite
        pts.append(z)
        ders.append(dz)
    return pts, ders


def _orbit(family: FamilySlice, lam: complex, z: complex, n: int):
    pts = [z]
    for _ in range(n):
        z = K.feval(family.code, family.prm, lam, z)
        if is_infinite(z):
            raise _Infinite
        pts.append(z)
    return pts


def _central(F, lam):
    h = _fd_step(lam)
    return (F(lam + h) - F(lam - h)) / (2 * h)


# -- virtual cycle parameters ----------------------------------------------------

def vc_residual(family: FamilySlice, lam, p: int, pole_index: int) -> complex:
    """f^{p-2}(v(lam)) - p_k(lam)."""
    lam = complex(lam)
    z = _orbit(family, lam, family.free_av(lam), p - 2)[-1]
    return z - family.pole(lam, pole_index)


def _check_intermediate(family, lam, p):
    pts = _orbit(family, lam, family.free_av(lam), p - 2)
    for j, z in enumerate(pts[:-1]):
        q, _ = family.nearest_pole(lam, z)
        if abs(z - q) < THROUGH_POLE:
            raise OrbitThroughPole(f"f^{j}(v) is a pole at lambda={lam}: order is {j + 2}, not {p}", j + 2)


def solve_virtual_cycle(family: FamilySlice, lam_guess, p: int, pole_index: int | None = None,
                        maxit: int = NEWTON_MAXIT, tol: float = VC_TOL) -> VirtualCycleHit:
    """Solve f^{p-2}(v(lam)) = p_k(lam) for lam near ``lam_guess``.

    The pole is tracked by its branch integer k, which stays fixed during the
    iteration.  When ``pole_index`` is omitted, k is the index of the pole
    nearest to f^{p-2}(v) at the guess.
    """
    if not family.has_poles:
        raise FamilyHasNoPoles(f"{family.name} has no poles")
    if p < 2:
        raise ValueError(f"virtual cycle order must be at least 2, got {p}")
    lam0 = complex(lam_guess)
    try:
        z = _orbit(family, lam0, family.free_av(lam0), p - 2)[-1]
    except _Infinite:
        raise OrbitThroughPole(f"orbit of v passes through a pole at the guess {lam0}", p - 1) from None
    k = family.nearest_pole(lam0, z)[1] if pole_index is None else int(pole_index)
    alpha = complex(family.free_av_coeffs[0])

    def G(lam):
        if family.is_singular(lam, 1e-14):
            raise _Infinite
        return vc_residual(family, lam, p, k)

    if family.deriv_lam is not None:
        def dG(lam):
            pts, ders = _orbit_with_derivative(family, lam, family.free_av(lam), alpha, p - 2)
            h = _fd_step(lam)
            dpole = (family.pole(lam + h, k) - family.pole(lam - h, k)) / (2 * h)
            return ders[-1] - dpole
    else:
        def dG(lam):
            return _central(G, lam)

    try:
        lam, res, its = _newton(G, dG, lam0, maxit, tol)
    except _Infinite:
        raise NoConvergence("derivative evaluation passed through a pole") from None
    family.check_regular(lam)
    _check_intermediate(family, lam, p)
    return VirtualCycleHit(lam, int(p), k, float(res), its)


# -- Misiurewicz parameters -------------------------------------------------------

def mis_residual(family: FamilySlice, lam, m: int, n: int, sv_index: int = 0) -> complex:
    lam = complex(lam)
    s = family.singular_values(lam)[sv_index]
    pts = _orbit(family, lam, s, m)
    return pts[m] - pts[n]


def solve_misiurewicz(family: FamilySlice, lam_guess, m: int, n: int, sv_index: int = 0,
                      maxit: int = NEWTON_MAXIT, tol: float = MIS_TOL) -> MisiurewiczHit:
    """Solve f^m(s(lam)) = f^n(s(lam)) and require the landing cycle to repel."""
    if not m > n >= 0:
        raise ValueError(f"need m > n >= 0, got m={m}, n={n}")

    def sv(lam):
        return family.singular_values(lam)[sv_index]

    def H(lam):
        if family.is_singular(lam, 1e-14):
            raise _Infinite
        return mis_residual(family, lam, m, n, sv_index)

    if family.deriv_lam is not None:
        def dH(lam):
            if sv_index == 0:
                ds = complex(family.free_av_coeffs[0])
            else:
                ds = _central(sv, lam)
            _, ders = _orbit_with_derivative(family, lam, sv(lam), ds, m)
            return ders[m] - ders[n]
    else:
        def dH(lam):
            return _central(H, lam)

    try:
        lam, res, its = _newton(H, dH, complex(lam_guess), maxit, tol, small_step=1e-8)
    except _Infinite:
        raise NoConvergence("derivative evaluation passed through a pole") from None
    if family.is_singular(lam, 1e-8):
        raise NoConvergence(f"Newton converged to the parameter singularity {lam}")
    pts = _orbit(family, lam, sv(lam), m)
    # a residual below rounding level with a vanishing derivative is not a root
    # (e.g. f^n(s) sliding toward an omitted value)
    slope = abs(dH(lam))
    spread = EPS * max(1.0, abs(pts[m]) + abs(pts[n])) / slope if slope > 0 else math.inf
    if not spread <= ROOT_SPREAD * max(1.0, abs(lam)):
        raise NoConvergence(f"ill-conditioned solution at lambda={lam} (root uncertainty {spread:.3g})")
    q = pts[n]
    logd = K.cycle_log_multiplier(family.code, family.prm, lam, q, m - n)
    rep = float(math.exp(min(logd.real, 700.0)))
    hit = MisiurewiczHit(lam, int(m), int(n), int(sv_index), float(res), rep, its)
    if not rep > 1.0:
        err = NotRepelling(f"landing cycle at lambda={lam} has |multiplier| {rep:.6g} <= 1")
        err.hit = hit
        raise err
    return hit


def misiurewicz_seed(family: FamilySlice, center, half_width: float, m: int, n: int,
                     sv_index: int = 0, res: int = 32) -> complex:
    """Grid point of the square around ``center`` with the smallest Newton step |H/H'|."""
    c = complex(center)
    u = (np.arange(res) + 0.5) / res * 2.0 - 1.0
    best, arg = math.inf, c
    for y in u:
        for x in u:
            lam = c + half_width * complex(x, y)
            if family.is_singular(lam, 1e-8):
                continue
            try:
                h = mis_residual(family, lam, m, n, sv_index)
                d = _central(lambda l: mis_residual(family, l, m, n, sv_index), lam)
            except _Infinite:
                continue
            if d == 0 or not cmath.isfinite(h) or not cmath.isfinite(d):
                continue
            step = abs(h / d)
            if step < best:
                best, arg = step, lam
    return arg


# -- density probe -------------------------------------------------------------------

@dataclass
class ProbeResult:
    radius: float
    hit: VirtualCycleHit | None
    candidates_tried: int = 0
    note: str = ""
    hits: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"type": "ProbeResult", "radius": self.radius,
                "hit": self.hit.to_dict() if self.hit else None,
                "candidates_tried": self.candidates_tried, "note": self.note}


def density_probe(family: FamilySlice, lam0, radii, p_max: int = 6, scan: int = 64,
                  max_polish: int = 32) -> list[ProbeResult]:
    """Look for virtual cycle parameters of order <= p_max in shrinking disks.

    For each radius the disk is sampled on a ``scan x scan`` grid.  Cells whose
    orbit of v passes closest to a pole seed :func:`solve_virtual_cycle`; the
    first polished solution inside the disk other than lam0 itself is kept.
    """
    if not family.has_poles:
        raise FamilyHasNoPoles(f"{family.name} has no poles; virtual cycles do not exist")
    lam0 = complex(lam0)
    depth = p_max - 1
    out = []
    for r in radii:
        r = float(r)
        u = (np.arange(scan) + 0.5) / scan * 2.0 - 1.0
        L = (lam0 + r * (u[None, :] + 1j * u[:, None])).ravel()
        L = L[np.abs(L - lam0) < r]
        L = L[[not family.is_singular(x) for x in L]]
        dist = np.empty((L.size, depth))
        kk = np.empty((L.size, depth), np.int64)
        K.scan_pole_distances(family.code, family.prm, L, depth, dist, kk)
        # lowest orders first: their Newton basins are the widest
        per = max(1, max_polish // depth)
        order = [(int(i), j) for j in range(depth)
                 for i in np.argsort(dist[:, j], kind="stable")[:per]]
        res = ProbeResult(r, None)
        seen = []
        for i, j in order:
            if not np.isfinite(dist[i, j]):
                continue
            res.candidates_tried += 1
            try:
                hit = solve_virtual_cycle(family, L[i], j + 2, int(kk[i, j]))
            except (NoConvergence, OrbitThroughPole, ValueError):
                continue
            if abs(hit.lam - lam0) >= r or abs(hit.lam - lam0) < 1e-9 * max(1.0, abs(lam0)):
                continue
            if any(abs(hit.lam - h.lam) < 1e-9 for h in seen):
                continue
            seen.append(hit)
            if res.hit is None:
                res.hit = hit
            break
        res.hits = seen
        if res.hit is None:
            res.note = "NoneFound"
        out.append(res)
    return out
