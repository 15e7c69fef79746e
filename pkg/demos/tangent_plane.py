"""Render the tangent family lam tan(z) on [-6, 6]^2 and look at its structure.

Writes tangent_plane.png next to this script, then reports the component of
the unit disk, the two unbounded components reaching the window edge, and how
well the two symmetries of the family are respected by the picture.

    python3 demos/tangent_plane.py [resolution]
"""
import sys
import time
from pathlib import Path

import numpy as np

from merodyn import Window, component_extract, emit_image, make_tangent, render_plane, symmetry_agreement

res = int(sys.argv[1]) if len(sys.argv) > 1 else 256
tan = make_tangent()

t0 = time.perf_counter()
grid = render_plane(tan, Window.square(6.0), (res, res))
print(f"rendered {res}x{res} in {time.perf_counter() - t0:.1f} s")

out = emit_image(grid, None, Path(__file__).with_name("tangent_plane.png"))
print(f"image: {out}")

# Near 0 the multiplier of the attracting fixed point equals lam itself,
# so this component should be the punctured unit disk.
disk = component_extract(grid, 0.5)
print(f"component of 0.5: period {disk.period}, {disk.size} cells, "
      f"max |lam| = {np.abs(grid.lam()[disk.mask]).max():.4f}")

for seed in (4.0, -4.0):
    c = component_extract(grid, seed)
    print(f"component of {seed:+}: period {c.period}, touches edge: {c.touches_edge}")

for sym in tan.symmetries:
    print(f"symmetry {sym.name}: agreement {symmetry_agreement(grid, sym):.5f}")
