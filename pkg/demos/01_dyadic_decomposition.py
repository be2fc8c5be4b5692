"""Dyadic filtration on a sampled field: conditional averages, the stopping
time, and the resulting decomposition into bad boxes and a good region.

Run:  python demos/01_dyadic_decomposition.py
"""

import numpy as np

from morreylab.dyadic import (
    box_doubling_constant,
    conditional_average,
    cz_decompose,
    dyadic_maximal,
    stopping_time,
)
from morreylab.grid import Field, lp_norm, make_grid, make_structure

s = make_structure(1, (1,))
g = make_grid(1, 2.0, 512)
x = g.axis(0)

# a spiky nonnegative field: two narrow plateaus over a small background
f = Field(g, 0.1 + 4.0 * ((x > -1.5) & (x < -1.3)) + 2.5 * ((x > 0.4) & (x < 0.9)))

print("coarse conditional averages (one value per generation-g box):")
for gen in (0, 1, 2, 3):
    avg = conditional_average(f, s, gen)
    print(f"  generation {gen}: {sorted(set(np.round(avg.values, 3)))}")

lam = 0.8
tau = stopping_time(f, s, lam)
print(f"\nstopping time at level {lam}: stops at generations "
      f"{sorted(set(tau.generations[tau.generations >= 0]))}, "
      f"never on {np.mean(tau.generations < 0):.0%} of the domain")
print("box-union structure verified:", tau.is_stopping_time())

boxes, good = cz_decompose(f, s, lam)
n0 = box_doubling_constant(g, s)
print(f"\ndecomposition at level {lam}: {len(boxes)} maximal bad boxes")
for b, avg in boxes:
    lo, hi = b.corner_coords(g, s.anisotropy)
    print(f"  generation {b.generation}  [{lo[0]:+.3f}, {hi[0]:+.3f})  "
          f"avg {avg:.3f}  (level sandwich: {lam} < avg <= {n0 * lam})")

m = dyadic_maximal(f, s)
for p in (1.5, 2.0, 3.0):
    q = p / (p - 1.0)
    print(f"maximal bound p={p}: ratio {lp_norm(m, p) / lp_norm(f, p):.3f} "
          f"<= dual exponent {q:.2f}")
