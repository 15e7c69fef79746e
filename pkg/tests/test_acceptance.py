"""Acceptance criteria 1 to 11, each at its stated tolerance.

Every test prints one ``criterion N: PASS|FAIL`` line (also repeated in the
terminal summary) and then asserts the same condition.
"""
import math
import time

import numpy as np
import pytest
from scipy.optimize import brentq

from conftest import record
from merodyn import (Status, Window, component_extract, cycle_signature, density_probe,
                     iterate_free_av, multiplier_at, ray_start_at_angle,
                     render_plane, solve_virtual_cycle, symmetry_agreement,
                     trace_internal_ray)
from merodyn.render import grid_csv_text, resolve_threads
from merodyn.verify import schwarzian_suite

CENTER = 0.5j * math.pi


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def test_criterion_01_tangent_multiplier_identity(tan):
    rng = np.random.default_rng(20240101)
    r = rng.uniform(0.05, 0.95, 100)
    lams = r * np.exp(2j * np.pi * rng.uniform(0, 1, 100))

    def run():
        return max(abs(multiplier_at(tan, lam) - lam) for lam in lams)

    err, dt = _timed(run)
    ok = err < 1e-9 and dt < 5
    record(1, ok, f"max |rho - lam| = {err:.3g} (tol 1e-9) over 100 lam, {dt:.2f} s (limit 5 s)")
    assert ok


def test_criterion_02_exponential_fixed_point(exp_family):
    z = brentq(lambda x: math.exp(x) - 2 - x, -3.0, -1.0, xtol=1e-16)
    oracle = math.exp(z)
    rho, dt = _timed(lambda: multiplier_at(exp_family, -2))
    err = abs(rho - oracle)
    ok = err < 1e-10 and dt < 1
    record(2, ok, f"|rho - e^z*| = {err:.3g} (tol 1e-10), rho = {rho.real:.15f}, {dt:.3f} s")
    assert ok


def test_criterion_03_virtual_cycle_closed_form(tan):
    def run():
        out = []
        for guess, want in ((-1.5j, -CENTER), (1.5j, CENTER)):
            hit = solve_virtual_cycle(tan, guess, 2)
            orbit = iterate_free_av(tan, hit.lam)
            out.append((abs(hit.lam - want), hit.residual, orbit.status, orbit.pole_hit_order))
        return out

    rows, dt = _timed(run)
    ok = dt < 1 and all(e < 1e-12 and res < 1e-11 and st == Status.PoleHit and k == 1
                        for e, res, st, k in rows)
    detail = "; ".join(f"|lam*-target| {e:.2g}, residual {res:.2g}, {Status(st).name} order {k}"
                       for e, res, st, k in rows)
    record(3, ok, f"{detail}; {dt:.3f} s")
    assert ok


def test_criterion_04_ray_lands_with_degenerating_cycle(tan):
    ray, dt = _timed(lambda: trace_internal_ray(tan, 1.2j, t_min=-18.0))
    land = ray.landing
    dist = abs(land.lam - CENTER) if land.lam is not None else math.inf
    sigs = [cycle_signature(tan, s.lam, s.cycle_point, ray.period) for s in ray.samples[-10:]]
    max_abs = min(s["max_abs"] for s in sigs)
    a1v = max(s["a1_minus_v"] for s in sigs)
    pole = max(s["pole_dist"] for s in sigs)
    landed = land.kind == "FiniteVirtualCenter" and dist < 1e-6
    sig_ok = max_abs > 1e2 and a1v < 1e-3 and pole < 1e-3
    ok = landed and sig_ok and dt < 30
    record(4, ok, f"landing {land.kind} at distance {dist:.2g} (tol 1e-6); over the last 10 samples "
                  f"min max|a_i| = {max_abs:.3g} (need > 1e2), max |a_1 - v| = {a1v:.2g}, "
                  f"max pole distance = {pole:.2g} (need < 1e-3); {dt:.2f} s")
    assert ok


def test_criterion_05_period_one_rays_are_unbounded(tan, exp_family):
    def run():
        return [trace_internal_ray(fam, seed, t_min=-12.0) for fam, seed in ((exp_family, -2.0), (tan, 4.0))]

    rays, dt = _timed(run)
    parts, ok = [], dt < 30
    for name, ray in zip(("exp", "tan"), rays):
        reach = float(np.abs(ray.lam).max())
        finite = ray.landing.kind == "FiniteVirtualCenter"
        ok = ok and reach > 1e4 and not finite
        parts.append(f"{name}: max |lam| = {reach:.3g} by t = {ray.t[-1]:.3g}, landing {ray.landing.kind}")
    record(5, ok, "; ".join(parts) + f" (need |lam| > 1e4 before t = -12); {dt:.2f} s")
    assert ok


def test_criterion_06_unique_virtual_center(tan):
    def run():
        ends = []
        for turns in (0.0, 0.25, 0.5, 0.75):
            ray = trace_internal_ray(tan, ray_start_at_angle(tan, 1.2j, turns), t_min=-18.0)
            ends.append((ray.landing.kind, ray.landing.lam))
        return ends

    ends, dt = _timed(run)
    lams = [lam for kind, lam in ends if kind == "FiniteVirtualCenter"]
    spread = max(abs(a - b) for a in lams for b in lams) if len(lams) == 4 else math.inf
    ok = spread < 1e-5 and dt < 120
    record(6, ok, f"4 rays at 0, 1/4, 1/2, 3/4 turns land with spread {spread:.2g} (tol 1e-5); {dt:.2f} s")
    assert ok


def test_criterion_07_tangent_figure_structure(tan, tan512):
    grid, dt = tan512
    px = grid.pixel[0]
    disk = component_extract(grid, 0.5)
    rmax = float(np.abs(grid.lam()[disk.mask]).max())
    neg, conj = (symmetry_agreement(grid, s) for s in tan.symmetries)
    right, left = component_extract(grid, 4.0), component_extract(grid, -4.0)
    checks = (rmax <= 1 + 2 * px, neg >= 0.999 and conj >= 0.999,
              right.period == 1 and left.period == 2 and right.touches_edge and left.touches_edge)
    ok = all(checks) and dt < 120
    record(7, ok, f"(i) unit-disk component max |lam| = {rmax:.4f} <= {1 + 2 * px:.4f}; (ii) agreement "
                  f"neg {neg:.5f}, conj {conj:.5f} (need 0.999); (iii) edge components of periods "
                  f"{right.period} and {left.period}; render {dt:.1f} s at {resolve_threads()} workers")
    assert ok


def test_criterion_08_density_probe(tan):
    results, dt = _timed(lambda: density_probe(tan, -CENTER, [0.5, 0.1, 0.02]))
    inside = [r.hit is not None and abs(r.hit.lam + CENTER) <= r.radius for r in results]
    ok = all(inside) and dt < 30
    desc = ", ".join(f"r={r.radius}: " + (f"order {r.hit.order} at {abs(r.hit.lam + CENTER):.3g}"
                                          if r.hit else "none") for r in results)
    record(8, ok, f"{desc}; {dt:.2f} s")
    assert ok


def test_criterion_09_schwarzian_suite():
    checks, dt = _timed(schwarzian_suite)
    ok = all(c.passed for c in checks) and dt < 1
    record(9, ok, "; ".join(f"{c.name} {c.value:.2g} (tol {c.tol:g})" for c in checks) + f"; {dt:.3f} s")
    assert ok


def test_criterion_10_nonzero_multipliers(tan512):
    grid, _ = tan512
    conv = grid.status == Status.ConvergedFreeCycle
    lr = grid.cells["log_abs_multiplier"][conv]
    small = int(np.count_nonzero(lr <= math.log(1e-9)))
    ok = small == 0
    record(10, ok, f"{small} of {conv.sum()} converged cells have |rho| <= 1e-9 "
                   f"(smallest log|rho| = {lr.min():.4g}, all finite: {bool(np.isfinite(lr).all())})")
    assert ok


@pytest.mark.slow
def test_criterion_11_determinism_and_scaling(tan, tan512):
    grid, _ = tan512
    threads = resolve_threads()
    w = Window.square(6.0)
    again, t512 = _timed(lambda: render_plane(tan, w, (512, 512), threads=threads))
    same = grid_csv_text(again) == grid_csv_text(grid)
    _, t1024 = _timed(lambda: render_plane(tan, w, (1024, 1024), threads=threads))
    ratio = t1024 / t512
    ok = same and ratio <= 4.6
    record(11, ok, f"CSV byte-identical: {same}; 1024^2 {t1024:.1f} s / 512^2 {t512:.1f} s = "
                   f"{ratio:.2f} (limit 4.6) at {threads} workers")
    assert ok
