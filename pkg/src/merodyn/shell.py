"""The multiplier map on a shell component: internal rays, level curves and
virtual centres.

Everything is done in log space.  Along a component the tracked attracting
cycle is continued by Newton from the previous parameter, and

    L(lam) = log rho(lam) = sum_i log f'(a_i)

is evaluated term by term, so neither a vanishing nor an exploding factor of the
product ever has to be formed.  An internal ray of angle theta is the curve
L(lam(t)) = t + 2 pi i theta, t decreasing; a level curve is Re L = log r.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import (BadSeed, Inconclusive, LeftComponent, NoConvergence, NumericalFailure,
                     OrbitThroughPole, Stalled)
from .families import FamilySlice
from .orbit import DEFAULT_BUDGET, IterationBudget, Status, iterate_free_av
from .render import PlaneGrid
from .special import VirtualCycleHit, solve_virtual_cycle

TWO_PI = 2.0 * math.pi
DIVERGENCE_CUTOFF = 1e4
EPS = 2.220446049250313e-16
FLOOR_ULPS = 2.0


def _wrap(a: float) -> float:
    return (a + math.pi) % TWO_PI - math.pi


@dataclass(frozen=True)
class StepControl:
    dt0: float = 0.05
    dt_min: float = 1e-4
    dt_max: float = 0.05
    grow: float = 1.5
    corrector_tol: float = 1e-10
    corrector_maxit: int = 12
    check_every: int = 25
    divergence_cutoff: float = DIVERGENCE_CUTOFF
    max_samples: int = 200000


@dataclass(frozen=True)
class RaySample:
    t: float
    lam: complex
    residual: float
    cycle_point: complex = 0j


@dataclass(frozen=True)
class Landing:
    kind: str  # FiniteVirtualCenter | AtParameterSingularity | DivergesToInfinity | Stalled
    lam: complex | None = None
    hit: VirtualCycleHit | None = None
    reason: str = ""

    def to_dict(self) -> dict:
        lam = None if self.lam is None else [self.lam.real, self.lam.imag]
        return {"type": "Landing", "kind": self.kind, "lam": lam,
                "hit": self.hit.to_dict() if self.hit else None, "reason": self.reason}


@dataclass(frozen=True)
class AtInfinity:
    last_lam: complex
    cutoff: float


@dataclass(frozen=True)
class AtParameterSingularity:
    lam: complex


@dataclass
class InternalRay:
    theta: float
    period: int
    samples: list = field(default_factory=list)
    landing: Landing | None = None
    family_name: str = ""
    cutoff: float = DIVERGENCE_CUTOFF

    @property
    def t(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    @property
    def lam(self) -> np.ndarray:
        return np.array([s.lam for s in self.samples])


# -- cycle tracking ---------------------------------------------------------------

class _Tracker:
    """Continues one attracting cycle of period k through parameter space."""

    def __init__(self, family: FamilySlice, k: int):
        self.family = family
        self.k = int(k)

    def cycle(self, lam: complex, seed: complex):
        fam = self.family
        x, ok, _, _ = K.cycle_newton(fam.code, fam.prm, lam, seed, self.k, 60, 1e-13)
        if not ok:
            return None
        if K.minimal_period(fam.code, fam.prm, lam, x, self.k, 1e-8) != self.k:
            return None
        return x

    def logmult(self, lam: complex, x: complex) -> complex:
        return K.cycle_log_multiplier(self.family.code, self.family.prm, lam, x, self.k)

    def dlog(self, lam: complex, x: complex):
        """dL/dlam by central differences, continuing the cycle to lam +- h."""
        h = 1e-7 * max(1.0, abs(lam))
        xp = self.cycle(lam + h, x)
        xm = self.cycle(lam - h, x)
        if xp is None or xm is None:
            return None
        d = self.logmult(lam + h, xp) - self.logmult(lam - h, xm)
        d = complex(d.real, _wrap(d.imag))
        return d / (2 * h)

    def solve(self, lam: complex, x: complex, target: complex, tol: float, maxit: int):
        """Newton on L(lam) = target (imaginary part mod 2 pi)."""
        for _ in range(maxit + 1):
            x = self.cycle(lam, x)
            if x is None:
                return None
            L = self.logmult(lam, x)
            R = complex(L.real - target.real, _wrap(L.imag - target.imag))
            d = self.dlog(lam, x)
            if d is None or d == 0 or not cmath.isfinite(d):
                return None
            # L cannot be resolved better than one ulp of lam times |L'|
            if abs(R) < max(tol, FLOOR_ULPS * EPS * max(1.0, abs(lam)) * abs(d)):
                return lam, x, abs(R)
            lam = lam - R / d
        return None


def _seed_cycle(family: FamilySlice, lam: complex, budget: IterationBudget):
    res = iterate_free_av(family, lam, budget)
    if res.status != Status.ConvergedFreeCycle:
        raise BadSeed(f"seed {lam} is not in a shell component ({res.status.name})")
    return res.cycle


def _check_same_component(family, lam, x, k, budget):
    res = iterate_free_av(family, lam, budget)
    if res.status != Status.ConvergedFreeCycle or res.cycle.period != k:
        got = res.status.name if res.cycle is None else f"period {res.cycle.period}"
        raise LeftComponent(f"classification changed to {got} at lambda={lam}")
    if not any(abs(x - a) <= 1e-6 * max(1.0, abs(a)) for a in res.cycle.points):
        y = res.cycle.points[0]
        fam = family
        # the classifier may report a different base point of the same cycle
        for _ in range(k):
            if abs(x - y) <= 1e-6 * max(1.0, abs(y)):
                return
            y = K.feval(fam.code, fam.prm, lam, y)
        raise LeftComponent(f"v is attracted to a different cycle at lambda={lam}")


# -- internal rays ----------------------------------------------------------------------

def trace_internal_ray(family: FamilySlice, lam_start, theta=None, t_min: float = -12.0,
                       step_ctrl: StepControl | None = None,
                       budget: IterationBudget = DEFAULT_BUDGET, locate: bool = True) -> InternalRay:
    """Follow the internal ray through ``lam_start`` toward t = ``t_min``.

    The angle is always taken from rho(lam_start): the ray is the
    t-continuation of the seed, and the seed fixes the sheet of the covering.
    ``theta`` is accepted for symmetry with the command line and ignored
    (``"auto"`` and ``None`` mean the same thing).
    """
    sc = step_ctrl or StepControl()
    lam = complex(lam_start)
    family.check_regular(lam)
    cyc = _seed_cycle(family, lam, budget)
    k = cyc.period
    tr = _Tracker(family, k)
    x = tr.cycle(lam, cyc.points[0])
    if x is None:
        raise BadSeed(f"could not refine the attracting cycle at {lam}")
    L0 = tr.logmult(lam, x)
    theta0 = (L0.imag / TWO_PI) % 1.0
    t = L0.real
    phase = L0.imag
    ray = InternalRay(theta0, k, [RaySample(t, lam, 0.0, x)], family_name=family.name,
                      cutoff=sc.divergence_cutoff)
    if not t_min < t - 1e-12 * max(1.0, abs(t)):
        ray.landing = Landing("Stalled", reason="NoProgress")
        return ray

    dt = sc.dt0
    n_ok = 0
    while t > t_min:
        if len(ray.samples) >= sc.max_samples:
            ray.landing = Landing("Stalled", reason="sample budget exhausted")
            return ray
        step = min(dt, t - t_min)
        d = tr.dlog(lam, x)
        sol = None
        if d is not None and d != 0 and cmath.isfinite(d):
            pred = lam - step / d
            sol = tr.solve(pred, x, complex(t - step, phase), sc.corrector_tol, sc.corrector_maxit)
            if sol is not None and abs(sol[0] - lam) > 10 * abs(step / d) + 1e-12:
                sol = None  # corrector jumped away from the predicted point
        if sol is None:
            dt *= 0.5
            if dt < sc.dt_min:
                ray.landing = Landing("Stalled", reason=f"corrector failed at t={t:.6g}")
                return ray
            continue
        lam, x, R = sol
        t -= step
        ray.samples.append(RaySample(t, lam, R, x))
        n_ok += 1
        dt = min(dt * sc.grow, sc.dt_max)
        if abs(lam) > sc.divergence_cutoff:
            ray.landing = Landing("DivergesToInfinity", lam=lam,
                                  reason=f"|lambda| > {sc.divergence_cutoff:g}")
            return ray
        if sc.check_every and n_ok % sc.check_every == 0:
            _check_same_component(family, lam, x, k, budget)
    if locate:
        try:
            out = locate_virtual_center(family, ray)
        except Inconclusive as exc:
            ray.landing = Landing("Stalled", lam=lam, reason=f"Inconclusive: {exc}")
        else:
            if isinstance(out, VirtualCycleHit):
                ray.landing = Landing("FiniteVirtualCenter", lam=out.lam, hit=out)
            elif isinstance(out, AtParameterSingularity):
                ray.landing = Landing("AtParameterSingularity", lam=out.lam)
            else:
                ray.landing = Landing("DivergesToInfinity", lam=out.last_lam)
    else:
        ray.landing = Landing("Stalled", lam=lam, reason="reached t_min")
    return ray


def cycle_signature(family: FamilySlice, lam, x, k: int) -> dict:
    """Shape of a cycle near a virtual centre.

    The cycle is relabelled so that a_0 has the largest modulus; returns
    max|a_i|, |a_1 - v(lam)|, the distance of a_{k-1} to its nearest pole, and
    the virtual cycle order suggested by the cycle (2 + the first j with
    f^j(a_1) closest to a pole).
    """
    lam = complex(lam)
    pts = [complex(x)]
    for _ in range(k - 1):
        pts.append(K.feval(family.code, family.prm, lam, pts[-1]))
    v = family.free_av(lam)
    mods = np.abs(pts)
    top = [i for i in range(k) if mods[i] >= (1 - 1e-6) * mods.max()]
    # symmetric cycles have several largest points; take the one mapping onto v
    i0 = min(top, key=lambda i: abs(pts[(i + 1) % k] - v))
    a = pts[i0:] + pts[:i0]
    a1 = a[1 % k]
    last = a[k - 1]
    if family.has_poles:
        pole_dist = abs(last - family.nearest_pole(lam, last)[0])
        d = []
        for j in range(max(1, k - 1)):
            z = a[(1 + j) % k]
            p, kk = family.nearest_pole(lam, z)
            d.append((abs(z - p), j, kk))
        dist, j, kk = min(d)
    else:
        pole_dist, j, kk = math.inf, 0, 0
    return {"max_abs": float(max(abs(z) for z in a)), "a1_minus_v": abs(a1 - v),
            "pole_dist": float(pole_dist), "order": 2 + j, "pole_index": int(kk), "points": a}


def _tail_trend(ray: InternalRay, frac: float = 0.6, min_samples: int = 6):
    """Power-law fit |dlam/dt| ~ C |t|^-alpha over the deep end of the ray.

    Returns (alpha, remaining, direction): the path length still to go if the
    law continues (finite only for alpha > 1) and the unit direction of travel.
    """
    t = np.array([s.t for s in ray.samples])
    lam = np.array([s.lam for s in ray.samples])
    sel = t <= frac * t[-1]
    if t[-1] >= 0 or sel.sum() < min_samples:
        return None
    t, lam = t[sel], lam[sel]
    dt = np.diff(t)
    dl = np.diff(lam)
    ok = dt != 0
    tm = 0.5 * (t[1:] + t[:-1])[ok]
    speed = np.abs(dl[ok] / dt[ok])
    if tm.size < min_samples - 1 or np.any(speed <= 0):
        return None
    alpha = -np.polyfit(np.log(-tm), np.log(speed), 1)[0]
    d = dl[ok][-1]
    direction = d / abs(d) if d != 0 else 0j
    remaining = speed[-1] * abs(tm[-1]) / (alpha - 1.0) if alpha > 1.0 else math.inf
    return float(alpha), float(remaining), complex(direction)


def locate_virtual_center(family: FamilySlice, ray: InternalRay, window: int = 5,
                          cauchy_tol: float = 1e-4):
    """Decide where a traced ray ends.

    * past the divergence cutoff: :class:`AtInfinity`;
    * a Cauchy-convergent tail (diameter of the last ``window`` samples below
      ``cauchy_tol``) or a tail whose speed decays like |t|^-alpha with
      alpha > 1 (finite remaining length): the end point is matched to a listed
      parameter singularity, or polished as a virtual cycle parameter whose
      order and pole are read off the cycle.  A polished solution is accepted
      when it lies within the predicted remaining length of the ray's end.
    Anything else raises :class:`Inconclusive`.
    """
    if ray.landing is not None and ray.landing.kind == "DivergesToInfinity":
        return AtInfinity(ray.samples[-1].lam, ray.cutoff)
    if ray.landing is not None and ray.landing.kind == "Stalled" and ray.landing.reason != "reached t_min" \
            and not ray.landing.reason.startswith("Inconclusive"):
        raise Inconclusive(f"ray stalled: {ray.landing.reason}")
    if len(ray.samples) < window:
        raise Inconclusive("too few samples")
    last = ray.samples[-1]
    tail = np.array([s.lam for s in ray.samples[-window:]])
    diam = float(np.max(np.abs(tail[:, None] - tail[None, :])))
    trend = _tail_trend(ray)
    if diam < cauchy_tol:
        reach, direction = max(2 * diam, cauchy_tol), 0j
        if trend is not None and trend[0] > 1.0 and trend[1] > reach:
            _, reach, direction = trend
    else:
        if trend is None or not trend[0] > 1.0:
            alpha = "n/a" if trend is None else f"{trend[0]:.3g}"
            raise Inconclusive(f"tail neither converges (diameter {diam:.3g}) nor slows down "
                               f"fast enough (speed exponent {alpha})")
        _, reach, direction = trend
    for s in family.parameter_singularities:
        if abs(last.lam - s) <= reach:
            return AtParameterSingularity(complex(s))
    if not family.has_poles:
        raise Inconclusive("the family has no poles, so no finite virtual centre exists")
    sig = cycle_signature(family, last.lam, last.cycle_point, ray.period)
    for f in (0.0, 0.5, 1.0):
        try:
            hit = solve_virtual_cycle(family, last.lam + f * reach * direction, sig["order"], sig["pole_index"])
        except (NoConvergence, OrbitThroughPole, ValueError):
            continue
        if abs(hit.lam - last.lam) <= 1.5 * reach + 1e-4:
            return hit
    raise Inconclusive(f"no virtual cycle parameter of order {sig['order']} within {reach:.3g} of {last.lam}")


# -- multiplier field ----------------------------------------------------------------

def multiplier_field(family: FamilySlice, grid: PlaneGrid) -> np.ndarray:
    """Complex rho per cell (nan where v is not attracted by a free cycle)."""
    if grid.log_multiplier is None:
        raise ValueError("grid carries no multiplier data")
    if grid.family_id != family.name:
        raise ValueError(f"grid was rendered for {grid.family_id}, not {family.name}")
    conv = grid.status == Status.ConvergedFreeCycle
    out = np.full(grid.status.shape, np.nan + 1j * np.nan)
    out[conv] = np.exp(grid.log_multiplier[conv])
    return out


# -- level curves -------------------------------------------------------------------

@dataclass
class BoundaryTrace:
    level: float
    points: np.ndarray
    closed: bool
    phi: np.ndarray | None = None
    stop_reason: str = ""


def _radial_move(tr, lam, x, t_from, t_to, phase, sc):
    """Continue along a ray (either direction in t) from t_from to t_to."""
    t = t_from
    dt = sc.dt0
    while abs(t - t_to) > 0:
        step = math.copysign(min(dt, abs(t_to - t)), t_to - t)
        d = tr.dlog(lam, x)
        sol = None
        if d is not None and d != 0:
            sol = tr.solve(lam + step / d, x, complex(t + step, phase), sc.corrector_tol, sc.corrector_maxit)
        if sol is None:
            dt *= 0.5
            if dt < sc.dt_min:
                raise Stalled(f"radial continuation failed at t={t:.6g}")
            continue
        lam, x, _ = sol
        t += step
        dt = min(dt * sc.grow, 4 * sc.dt0)
    return lam, x


def _angular_arc(tr, lam, x, level, phi0, direction, sc, ds, max_points, phi_span, window,
                 lam_start, closure_tol):
    """Walk phi in one direction along Re L = level; returns (points, phis, closed, reason)."""
    pts, phis = [], []
    phi = phi0
    dphi = 0.05
    next_turn = phi0 + direction * TWO_PI
    while len(pts) < max_points:
        if abs(phi - phi0) >= phi_span:
            return pts, phis, False, "phi span exhausted"
        d = tr.dlog(lam, x)
        if d is None or d == 0:
            msg = f"derivative failed at phi={phi:.6g}"
            if pts:
                return pts, phis, False, "stalled: " + msg
            raise Stalled(msg)
        # choose dphi so that the step in lambda is about ds
        speed = 1.0 / abs(d)
        want = min(max(ds / speed, 1e-6), 0.5)
        dphi = min(dphi * 1.5, want)
        step = direction * dphi
        clipped = (next_turn - phi) * direction <= dphi
        if clipped:
            step = next_turn - phi
        sol = tr.solve(lam + 1j * step / d, x, complex(level, phi + step), sc.corrector_tol, sc.corrector_maxit)
        if sol is None:
            dphi *= 0.25
            if dphi < 1e-10:
                msg = f"angular corrector failed at phi={phi:.6g}"
                if pts:
                    return pts, phis, False, "stalled: " + msg
                raise Stalled(msg)
            continue
        lam, x, _ = sol
        phi += step
        pts.append(lam)
        phis.append(phi)
        if clipped:
            if abs(lam - lam_start) < closure_tol:
                return pts, phis, True, "closed"
            next_turn += direction * TWO_PI
        if window is not None:
            c, hw, hh = window
            if abs(lam.real - c.real) > hw or abs(lam.imag - c.imag) > hh:
                return pts, phis, False, "window edge"
        if abs(lam) > sc.divergence_cutoff:
            return pts, phis, False, "divergence cutoff"
    return pts, phis, False, "point budget exhausted"


def trace_boundary_level(family: FamilySlice, lam_seed, r: float, ds: float = 1e-2,
                         max_points: int = 4000, phi_span: float = 60 * math.pi, window=None,
                         closure_tol: float = 1e-6, step_ctrl: StepControl | None = None,
                         budget: IterationBudget = DEFAULT_BUDGET) -> BoundaryTrace:
    """Trace the level curve |rho| = r through the component of ``lam_seed``.

    The seed is first moved along its internal ray to the level, then arg rho
    is continued.  Steps land exactly on every full turn of arg rho so that a
    curve that closes up is recognised to ``closure_tol``.  A curve that does
    not close is followed in both directions until ``phi_span`` of arg rho,
    ``max_points`` per direction, the window ``(center, half_w, half_h)`` or
    a corrector failure ends it; :class:`Stalled` is raised only when neither
    direction makes any progress.
    """
    r = float(r)
    if not 0.0 < r < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {r}")
    sc = step_ctrl or StepControl()
    lam = complex(lam_seed)
    family.check_regular(lam)
    cyc = _seed_cycle(family, lam, budget)
    tr = _Tracker(family, cyc.period)
    x = tr.cycle(lam, cyc.points[0])
    if x is None:
        raise BadSeed(f"could not refine the attracting cycle at {lam}")
    L = tr.logmult(lam, x)
    level = math.log(r)
    lam, x = _radial_move(tr, lam, x, L.real, level, L.imag, sc)
    if window is not None:
        window = (complex(window[0]), float(window[1]), float(window[2]))
    phi0 = L.imag
    fwd, fphi, closed, why = _angular_arc(tr, lam, x, level, phi0, +1, sc, ds, max_points, phi_span,
                                          window, lam, closure_tol)
    if closed:
        pts = np.array([lam] + fwd[:-1])
        return BoundaryTrace(r, pts, True, np.array([phi0] + fphi[:-1]), "closed")
    bwd, bphi, _, why_b = _angular_arc(tr, lam, x, level, phi0, -1, sc, ds, max_points, phi_span,
                                       window, lam, closure_tol)
    pts = np.array(bwd[::-1] + [lam] + fwd)
    phis = np.array(bphi[::-1] + [phi0] + fphi)
    return BoundaryTrace(r, pts, False, phis, f"{why_b} / {why}")


def ray_start_at_angle(family: FamilySlice, lam_seed, turns: float, step_ctrl: StepControl | None = None,
                       budget: IterationBudget = DEFAULT_BUDGET, ds: float = 1e-2) -> complex:
    """Point of the seed's level curve where arg rho has advanced by ``turns``."""
    sc = step_ctrl or StepControl()
    lam = complex(lam_seed)
    cyc = _seed_cycle(family, lam, budget)
    tr = _Tracker(family, cyc.period)
    x = tr.cycle(lam, cyc.points[0])
    L = tr.logmult(lam, x)
    target = L.imag + TWO_PI * float(turns)
    phi = L.imag
    dphi = 0.05
    while abs(target - phi) > 0:
        d = tr.dlog(lam, x)
        if d is None or d == 0:
            raise Stalled("derivative failed during angular move")
        want = min(max(ds * abs(d), 1e-6), 0.5)
        dphi = min(dphi * 1.5, want)
        step = math.copysign(min(dphi, abs(target - phi)), target - phi)
        sol = tr.solve(lam + 1j * step / d, x, complex(L.real, phi + step), sc.corrector_tol, sc.corrector_maxit)
        if sol is None:
            dphi *= 0.25
            if dphi < 1e-10:
                raise Stalled("angular corrector failed")
            continue
        lam, x, _ = sol
        phi += step
    return lam


__all__ = [
    "AtInfinity", "AtParameterSingularity", "BoundaryTrace", "InternalRay", "Landing", "RaySample",
    "StepControl", "cycle_signature", "locate_virtual_center", "multiplier_field", "ray_start_at_angle",
    "trace_boundary_level", "trace_internal_ray", "NumericalFailure",
]
