"""Morrey norms certify membership that no Lebesgue exponent sees, and the
library's counterexample fields show where the naive estimates break.

Run:  python demos/04_morrey_norms_and_counterexamples.py
"""

from morreylab.grid import lp_norm, make_grid, make_structure
from morreylab.norms import NormSpec, drift_seminorm, evaluate_norm
from morreylab.testfunctions import test_function

s3 = make_structure(3, (1, 1, 1))
g3 = make_grid(3, 1.5, 64)

b = test_function("power", g3, gamma=1.0)
print("|x|^{-1} in d = 3:")
for p in (1.5, 2.0, 2.5, 3.0):
    v = evaluate_norm(b, NormSpec("Epbr", p=p, beta=1.0, r=1.0), s3)
    print(f"  scale-weighted p = {p}: {v}")
print("  (finite below the dimension, infinite at it)")

print("\nthe drift seminorm of |x|^{-1} is scale-invariant:")
for rho_b in (0.25, 0.5, 1.0):
    print(f"  cap {rho_b}: {drift_seminorm(b, 2.0, rho_b, s3):.4f}")

s2 = make_structure(2, (1, 1))
g2 = make_grid(2, 1.25, 512)
bumps, radii = test_function("cz_bump", g2, p=1.0)
print(f"\ndisjoint-bump field with {len(radii)} copies:")
print(f"  Morrey seminorm {drift_seminorm(bumps, 1.0, 1.0, s2):.3f} (finite)")
for n in (128, 256, 512):
    gg = make_grid(2, 1.25, n)
    bb, _ = test_function("cz_bump", gg, p=1.0)
    print(f"  L_1.3 over the support strip at {n} cells/axis: "
          f"{lp_norm(bb, 1.3, region=([0.0, -0.6], [1.05, 0.6])):.3f}")
print("  (the Lebesgue norm grows without bound under refinement)")

sp = make_structure(3, (2, 1, 1))
gp = make_grid(3, (1.0, 1.2, 1.2), (32, 48, 48))
p0, q0 = 2.5, 2.0
f = test_function("lqp_vs_lpq", gp, p0=p0)
rev = drift_seminorm(f, p0, 1.0, sp, q_b=q0, reversed_order=True)
std = drift_seminorm(f, p0, 1.0, sp, q_b=q0, reversed_order=False)
print("\nmoving-sphere profile, mixed-norm order asymmetry:")
print(f"  inner-time order: {rev:.3f} (finite)")
print(f"  inner-space order: {std} (the shell cells carry infinite exact mass)")
