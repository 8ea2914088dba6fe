"""Essential subtrees: where a measure still carries enough variation.

A node enters while its cone variation exceeds level/n.  The resulting
subtree is small (terminal levels sum to at most n) and the approximator
built on it loses at most 1/n in squared norm when beta = 2.

Run:  python demos/02_essential_subtrees.py
"""

from entropy_lab import CounterStream, enumerate_admissible_subtrees, essential_subtree
from entropy_lab.essential import verify_size_bounds
from entropy_lab.harness import random_tree_measure
from entropy_lab.operators import residual_norm_sq

stream = CounterStream.for_trial(seed=7, trial=0)
mu = random_tree_measure(stream, max_depth=24, atoms=30)
print(f"random measure: {len(mu.atoms)} atoms, deepest level {mu.max_level}, ||mu||_1 = {mu.norm1():.12f}")

print("\n  n  |Y|  sum|t|  residual^2   1/n")
for n in (2, 4, 8, 16, 32, 64):
    res = essential_subtree(mu, n)
    levels, size = verify_size_bounds(res)
    r2 = residual_norm_sq(mu, res.upsilon, 2.0)
    print(f"{n:3d} {size:4d} {levels:7d}  {r2:.3e}  {1 / n:.3e}")

res = essential_subtree(mu, 8)
print("\nterminal nodes at n=8:", res.upsilon.terminal)
print("stopped frontier size:", len(res.boundary))

# Every essential subtree for n lies in a family of size at most (4e)^n.
print("\nadmissible family sizes:", [len(enumerate_admissible_subtrees(n)) for n in range(9)])
print("(4e)^n                 :", [round((4 * 2.718281828) ** n) for n in range(9)])
