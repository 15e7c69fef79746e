"""Fate of the free asymptotic value and refinement of attracting cycles."""
from __future__ import annotations

import cmath
import enum
import json
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import _kernels as K
from .errors import NoConvergence, NotAttracting, PeriodCollapse
from .families import FamilySlice

NEAR_INDIFFERENT = 0.999


class Status(enum.IntEnum):
    Undetermined = K.UNDETERMINED
    ConvergedFreeCycle = K.CONVERGED
    CapturedPersistent = K.CAPTURED
    PoleHit = K.POLE_HIT
    ParameterSingularity = K.PARAM_SINGULAR


@dataclass(frozen=True)
class IterationBudget:
    max_iter: int = 5000
    transient: int = 200
    max_period: int = 64
    eps_hit: float = 1e-9
    eps_capture: float = 1e-7
    capture_confirm: int = 3
    conv_tol: float = 1e-9
    check_every: int = 16

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "IterationBudget":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown budget fields: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "IterationBudget":
        return cls.from_dict(json.loads(text))

    def kernel_args(self):
        return (int(self.max_iter), int(self.transient), int(self.max_period),
                float(self.eps_hit), float(self.eps_capture), int(self.capture_confirm),
                float(self.conv_tol), int(self.check_every), REFINE_MAXIT, REFINE_TOL)


DEFAULT_BUDGET = IterationBudget()
REFINE_MAXIT = 60
REFINE_TOL = 1e-12


@dataclass(frozen=True)
class CycleRecord:
    points: tuple
    period: int
    multiplier: complex
    residual: float
    log_multiplier: complex = 0j

    @property
    def abs_multiplier(self) -> float:
        return float(np.exp(self.log_multiplier.real))


@dataclass(frozen=True)
class OrbitResult:
    status: Status
    iterations_used: int
    pole_hit_order: int | None = None
    cycle: CycleRecord | None = None
    capture_index: int | None = None
    near_indifferent: bool = False
    last_point: complex | None = field(default=None, compare=False)


def _cycle_from_point(family: FamilySlice, lam: complex, x: complex, k: int) -> CycleRecord:
    code, prm = family.code, family.prm
    pts = [x]
    rho = 1.0 + 0j
    y = x
    for _ in range(k):
        rho *= K.fderiv(code, prm, lam, y)
        y = K.feval(code, prm, lam, y)
        pts.append(y)
    residual = abs(pts[-1] - x)
    logm = K.cycle_log_multiplier(code, prm, lam, x, k)
    if rho == 0 or not cmath.isfinite(rho):
        rho = cmath.exp(logm)
    return CycleRecord(tuple(pts[:-1]), k, rho, residual, logm)


def iterate_free_av(family: FamilySlice, lam, budget: IterationBudget = DEFAULT_BUDGET) -> OrbitResult:
    """Iterate v(lambda) and classify where it goes."""
    lam = complex(lam)
    family.check_regular(lam)
    status, it, k, x, logm, order, cap, _ = K.classify(
        family.code, family.prm, lam, *budget.kernel_args())
    status = Status(status)
    if status == Status.ConvergedFreeCycle:
        cyc = _cycle_from_point(family, lam, x, int(k))
        return OrbitResult(status, int(it), cycle=cyc,
                           near_indifferent=cyc.abs_multiplier > NEAR_INDIFFERENT,
                           last_point=x)
    if status == Status.PoleHit:
        return OrbitResult(status, int(it), pole_hit_order=int(order), last_point=x)
    if status == Status.CapturedPersistent:
        return OrbitResult(status, int(it), capture_index=int(cap), last_point=x)
    return OrbitResult(status, int(it), last_point=x)


def refine_cycle(family: FamilySlice, lam, seed_points, k: int,
                 maxit: int = REFINE_MAXIT, tol: float = REFINE_TOL) -> CycleRecord:
    """Newton-polish a period-k cycle from the first seed point."""
    lam = complex(lam)
    seeds = np.atleast_1d(np.asarray(seed_points, dtype=np.complex128))
    x, ok, res, _ = K.cycle_newton(family.code, family.prm, lam, complex(seeds[0]),
                                   int(k), int(maxit), float(tol))
    if not ok:
        raise NoConvergence(f"cycle refinement did not converge (residual {res:.3g})")
    d = K.minimal_period(family.code, family.prm, lam, x, int(k), 1e-8)
    if d != k:
        raise PeriodCollapse(f"refined cycle has period {d}, not {k}", d)
    cyc = _cycle_from_point(family, lam, x, int(k))
    if not cyc.log_multiplier.real < 0:
        raise NotAttracting(f"refined cycle has |rho| = {cyc.abs_multiplier:.6g}")
    return cyc


def multiplier_at(family: FamilySlice, lam, k_hint: int | None = None,
                  budget: IterationBudget = DEFAULT_BUDGET) -> complex:
    """Multiplier of the attracting cycle that attracts v(lambda)."""
    if k_hint is not None and k_hint > budget.max_period:
        budget = IterationBudget(**{**asdict(budget), "max_period": int(k_hint)})
    res = iterate_free_av(family, lam, budget)
    if res.status != Status.ConvergedFreeCycle:
        raise NotAttracting(f"{family.name} at {lam}: {res.status.name}")
    cyc = refine_cycle(family, lam, res.cycle.points, res.cycle.period)
    return cyc.multiplier


def lyapunov(result: OrbitResult) -> float:
    """log|rho| / period of the attracting cycle (nan when there is none)."""
    if result.cycle is None:
        return float("nan")
    return result.cycle.log_multiplier.real / result.cycle.period
