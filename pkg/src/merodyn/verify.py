"""Self-check suites behind ``merodyn verify``.

Each suite returns a list of :class:`Check` records: the measured value, the
tolerance it is held to, and whether it passed.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .families import make_exponential, make_tangent
from .orbit import IterationBudget, Status, iterate_free_av
from .render import Window, grid_csv_text, render_plane
from .schwarzian import (AnalyticMap, check_cocycle, exponential, f2_normal_form, identity, mobius,
                         schwarzian)
from .special import solve_virtual_cycle

SUITES = ("schwarzian", "tangent-centers", "exp-plane")

EXP_PLANE_WINDOW = Window(complex(-1.0, 0.0), 10.0, 10.0)
EXP_PLANE_RES = (96, 96)
EXP_PLANE_BUDGET = IterationBudget(max_iter=2000)
GOLDEN_NAME = "exp_plane_golden.csv"


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    value: float
    tol: float
    passed: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["type"] = "Check"
        return d


def _check(suite, name, value, tol) -> Check:
    value = float(value)
    return Check(suite, name, value, float(tol), bool(value <= tol))


def _points(n, seed, radius=2.5, avoid=None, gap=0.5):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        z = complex(*rng.uniform(-radius, radius, 2))
        if avoid is None or abs(z - avoid) > gap:
            out.append(z)
    return out


def schwarzian_suite() -> list[Check]:
    s = "schwarzian"
    exp_err = max(abs(schwarzian(exponential, z) + 0.5) for z in _points(10, 1))
    mob = mobius(2, 1, 1, 1)
    mob_err = max(abs(schwarzian(mob, z)) for z in _points(10, 2, avoid=-1.0))
    g = f2_normal_form(2, 1, 1, 1)
    vals = np.array([schwarzian(g, z) for z in _points(10, 3)])
    spread = float(np.max(np.abs(vals - vals.mean())))
    square = AnalyticMap(lambda z: z * z, lambda z: 2 * z)
    cocycle = max(check_cocycle(mob, exponential, 0.3 + 0.2j),
                  check_cocycle(identity, identity, 0.7 - 0.4j),
                  check_cocycle(exponential, square, 1.0))
    direct = abs(schwarzian(exponential.compose(square), 1.0) + 3.5)
    return [_check(s, "S(exp) + 1/2", exp_err, 1e-6),
            _check(s, "S(mobius)", mob_err, 1e-8),
            _check(s, "F2 normal form spread", spread, 1e-5),
            _check(s, "cocycle residual", cocycle, 1e-5),
            _check(s, "S(exp(z^2))(1) + 7/2", direct, 1e-5)]


def tangent_centers_suite() -> list[Check]:
    s = "tangent-centers"
    tan = make_tangent()
    out = []
    for guess, want in ((-1.5j, -0.5j * math.pi), (1.5j, 0.5j * math.pi)):
        hit = solve_virtual_cycle(tan, guess, 2)
        out.append(_check(s, f"|lam* - ({want.imag:+.6f}i)|", abs(hit.lam - want), 1e-11))
        out.append(_check(s, f"residual at {want.imag:+.6f}i", hit.residual, 1e-11))
        res = iterate_free_av(tan, hit.lam)
        bad = res.status != Status.PoleHit or res.pole_hit_order != 1
        out.append(_check(s, f"pole hit order 1 at {want.imag:+.6f}i", float(bad), 0.0))
    return out


def exp_plane_csv(threads: int | None = None) -> str:
    grid = render_plane(make_exponential(), EXP_PLANE_WINDOW, EXP_PLANE_RES, EXP_PLANE_BUDGET,
                        threads=threads)
    return grid_csv_text(grid)


def golden_path() -> Path:
    return Path(str(resources.files("merodyn") / "data" / GOLDEN_NAME))


def _status_period(text: str) -> np.ndarray:
    rows = [line.split(",") for line in text.strip().splitlines()[1:]]
    return np.array([(int(r[4]), int(r[5])) for r in rows], dtype=np.int64)


def exp_plane_suite(threads: int | None = None, bless: bool = False,
                    golden: Path | None = None) -> list[Check]:
    s = "exp-plane"
    path = Path(golden) if golden is not None else golden_path()
    text = exp_plane_csv(threads)
    if bless:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    want = _status_period(path.read_text())
    got = _status_period(text)
    if want.shape != got.shape:
        return [_check(s, "grid shape", math.inf, 0.0)]
    mismatch = int(np.count_nonzero(np.any(want != got, axis=1)))
    return [_check(s, "cells whose status or period differ from golden", mismatch, 0)]


def run_suite(suite_id: str, threads: int | None = None, bless: bool = False) -> list[Check]:
    if suite_id == "schwarzian":
        return schwarzian_suite()
    if suite_id == "tangent-centers":
        return tangent_centers_suite()
    if suite_id == "exp-plane":
        return exp_plane_suite(threads=threads, bless=bless)
    raise KeyError(f"unknown suite {suite_id!r}; known: {', '.join(SUITES)}")

