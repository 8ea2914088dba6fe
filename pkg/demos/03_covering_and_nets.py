"""Coverings of the branch indicators D = {V* delta_t} and explicit nets.

The net D_n (all branches of length at most n) covers D with a radius given
by a tail of the weights.  Greedy farthest-point covering is compared with
it, and the log-log slope is fitted.  At depth 14 the truncated tail bends
the curve, so the fitted slope is far steeper than the asymptotic one.

Run:  python demos/03_covering_and_nets.py
"""

import math

from entropy_lab.nets import (
    BranchCloud,
    dn_net_bound,
    fit_exponent,
    greedy_cover,
    packing_family,
    reference_rate,
    tail_weight,
)

beta, depth = 1.5, 14
cloud = BranchCloud(depth, beta)
print(f"|D| = {len(cloud)} points (depth {depth}, beta {beta})\n")
print(" n   k=2^(n-1)  greedy   D_n bound  ratio")
ns, radii = list(range(3, 11)), []
for n in ns:
    k = 2 ** (n - 1)
    r = greedy_cover(cloud, k).radius
    b = dn_net_bound(n, beta, depth)
    radii.append(r)
    print(f"{n:2d} {k:10d}  {r:.4f}   {b:.4f}     {r / b:.2f}")

fit = fit_exponent(ns, radii)
print(f"\nfitted slope {fit.slope:.3f}; asymptotic exponent {-(beta - 1) / 2}")
deep = [math.sqrt(tail_weight(n + 1, 10**7, beta)) for n in (100, 200, 400, 800)]
print(f"slope of the untruncated tail at n = 100..800: {fit_exponent([100, 200, 400, 800], deep).slope:.3f}")
print(f"reference shape at n=100: {reference_rate(beta, 100):.4f}")

# Packing: 2^n orthogonal images at common distance give the lower side.
for n in (2, 5, 8):
    pc, sep = packing_family(n, 2.0)
    print(f"packing n={n}: {len(pc)} points, pairwise distance {sep:.5f}")
