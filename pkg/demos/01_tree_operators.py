"""Cone sums on the binary tree and the weighted summation operators.

Run:  python demos/01_tree_operators.py
"""

import math

from entropy_lab import NodeId, TreeMeasure, apply_v, apply_vstar, mass, operator_norm_sq, variation
from entropy_lab.tree import ROOT

beta = 2.0

# A dipole: +1 at (2,1), -1 at (2,2).  The two atoms sit under different
# children of the root, so the root sees cancelling mass but full variation.
mu = TreeMeasure({NodeId(2, 1): 1.0, NodeId(2, 2): -1.0})
for t in (ROOT, NodeId(1, 0), NodeId(1, 1)):
    print(f"{t}: mass {mass(mu, t):+.1f}  variation {variation(mu, t):.1f}")

# V* turns a measure into its table of cone masses; a point mass becomes the
# indicator of its branch.
t = NodeId(4, 9)
image = apply_vstar(TreeMeasure.delta(t), beta)
print("\nV* delta_t is 1 on", sorted(image.entries))
print("its weighted norm^2:", image.norm_sq(), "=", math.fsum((1 + l) ** -beta for l in range(5)))

# V sums weighted values down a branch; duality with V* is exact.
f = {ROOT: 2.0, NodeId(1, 1): -1.0, NodeId(3, 4): 0.5}
lhs = math.fsum(m * apply_v(f, s, beta) for s, m in mu.atoms.items())
rhs = apply_vstar(mu, beta).dot(type(image)(f, beta))
print(f"\n<Vf, mu> = {lhs:.6f}   <f, V*mu>_W = {rhs:.6f}")

# Every branch has the same weights, so ||V||^2 is one partial zeta sum.
for depth in (0, 1, 10, 1000, 10**6):
    print(f"||V||^2 up to depth {depth:>7}: {operator_norm_sq(beta, depth):.8f}")
print(f"pi^2/6                     : {math.pi**2 / 6:.8f}")
