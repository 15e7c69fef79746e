"""Follow an internal ray from lam = 1.2i down to the multiplier's zero-limit.

Along the ray the multiplier shrinks like e^t while the attracting cycle
degenerates: one point runs off to infinity, one approaches the asymptotic
value and one approaches a pole.  The ray ends at the parameter i pi/2, where
the asymptotic value lands on a pole after one step.

    python3 demos/virtual_center_ray.py [t_min]
"""
import math
import sys

from merodyn import StepControl, cycle_signature, make_tangent, trace_internal_ray

t_min = float(sys.argv[1]) if len(sys.argv) > 1 else -600.0
tan = make_tangent()

ray = trace_internal_ray(tan, 1.2j, t_min=t_min, step_ctrl=StepControl(dt_max=20.0))
print(f"period {ray.period}, angle {ray.theta:.6f} turns, {len(ray.samples)} samples")

print(f"{'t':>9} {'lam':>28} {'max|a|':>9} {'|a1-v|':>9} {'pole dist':>9}")
step = max(1, len(ray.samples) // 12)
for s in ray.samples[::step] + [ray.samples[-1]]:
    sig = cycle_signature(tan, s.lam, s.cycle_point, ray.period)
    print(f"{s.t:9.1f} {s.lam.real:13.9f}{s.lam.imag:+13.9f}i "
          f"{sig['max_abs']:9.3g} {sig['a1_minus_v']:9.2g} {sig['pole_dist']:9.2g}")

land = ray.landing
print(f"landing: {land.kind}")
if land.lam is not None:
    print(f"  lam = {land.lam:.12f}, distance to i pi/2 = {abs(land.lam - 0.5j * math.pi):.2g}")
