"""Find parameters where the free asymptotic value is strictly preperiodic.

A coarse residual scan gives a seed, Newton polishes it, and the orbit is
checked to land on a repelling cycle.
"""
from merodyn import make_exponential, make_tangent, misiurewicz_seed, solve_misiurewicz

exp = make_exponential()
seed = misiurewicz_seed(exp, 1 + 2j, 1.5, 2, 1)
hit = solve_misiurewicz(exp, seed, 2, 1)
z = exp.eval(hit.lam, hit.lam)
print(f"exp, E(E(v)) = E(v): lam = {hit.lam:.12f}")
print(f"  fixed point {z:.12f}, |derivative| = {hit.repelling_check:.6f}")

tan = make_tangent()
for guess, m, n in ((-0.5625 + 1.0625j, 2, 1), (0.0625 + 1.5625j, 3, 2), (-0.5625 + 2.9375j, 4, 2)):
    hit = solve_misiurewicz(tan, guess, m, n)
    print(f"tan, m={m} n={n}: lam = {hit.lam:.12f}, residual {hit.residual:.1e}, "
          f"cycle multiplier {hit.repelling_check:.4g}")
