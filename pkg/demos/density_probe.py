"""Look for virtual-cycle parameters in shrinking disks around -i pi/2.

Each radius is searched from low to high order; the first solution found
inside the disk is reported.  Hits keep appearing however small the disk is,
which is what one expects if these parameters accumulate at the centre.
"""
import math

from merodyn import density_probe, iterate_free_av, make_tangent

tan = make_tangent()
center = -0.5j * math.pi
for r in density_probe(tan, center, [0.5, 0.1, 0.02, 0.005]):
    if r.hit is None:
        print(f"r = {r.radius:<6} nothing found ({r.note})")
        continue
    orbit = iterate_free_av(tan, r.hit.lam)
    print(f"r = {r.radius:<6} order {r.hit.order} at {r.hit.lam:.10f} "
          f"(distance {abs(r.hit.lam - center):.3g}, {orbit.status.name} at step {orbit.pole_hit_order})")
