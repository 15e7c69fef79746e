"""The exponential family e^z + lam: the period-1 region is unbounded.

Renders [-6, 6]^2, writes exp_plane.png, and then follows the ray from
lam = -2 far enough to watch it leave every bounded set.

    python3 demos/exp_plane.py
"""
from pathlib import Path

from merodyn import (StepControl, Window, component_extract, emit_image, make_exponential,
                     multiplier_at, render_plane, trace_internal_ray)

exp = make_exponential()
grid = render_plane(exp, Window.square(6.0), (256, 256))
emit_image(grid, None, Path(__file__).with_name("exp_plane.png"))
comp = component_extract(grid, -2.0)
print(f"period {comp.period} component of -2: {comp.size} cells, touches edge {comp.touches_edge}")
print(f"multiplier at -2: {multiplier_at(exp, -2):.15f}")

far = trace_internal_ray(exp, -2.0, t_min=-1e6, step_ctrl=StepControl(dt_max=500.0, grow=2.0))
print(f"ray from -2: reached |lam| = {abs(far.lam[-1]):.3g} at t = {far.t[-1]:.4g}, "
      f"landing {far.landing.kind}")
