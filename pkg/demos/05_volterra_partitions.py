"""Essential dyadic partitions and the finite-rank approximation of V*.

Intervals split while their variation is at least level/n.  Anchoring each
interval's mass at its left end gives a rank-|I| operator whose error is of
order n^{-1/2}; coarsening to a level-m grid costs at most 2 (ln n^{1/4})^{-1/2}.

Run:  python demos/05_volterra_partitions.py
"""

from entropy_lab import CounterStream, IntervalMeasure, KernelConfig, essential_partition
from entropy_lab.harness import random_interval_measure
from entropy_lab.quadrature import QuadratureConfig
from entropy_lab.volterra import approximation_error, auxiliary_partition, ne_net, split_norm_bound

cfg = KernelConfig()
quad = QuadratureConfig(abs_tol=1e-8)

part = essential_partition(IntervalMeasure([(0.0123, 1.0)]), 4, cfg)
print("single atom, n=4:", [(l, i) for l, i in part], f"({len(part)} intervals)")

mu = random_interval_measure(CounterStream.for_trial(3, 0), cfg.r, 6)
print("\nrandom measure atoms:", [(round(x, 4), round(m, 3)) for x, m in mu.atoms])
print("\n  n  |I|  error    bound    split    bound    |E|  net size")
for n in (8, 16, 32, 64, 128):
    ae = approximation_error(mu, n, cfg, quad)
    aux = auxiliary_partition(ae.partition, n)
    sp = split_norm_bound(ae.partition, aux, n, cfg, quad, mu=mu)
    net = ne_net(aux, n)
    print(f"{n:3d} {len(ae.partition):4d}  {ae.err:.4f}   {ae.bound:.4f}   {sp.applied:.4f}   "
          f"{sp.bound:.4f}  {len(aux):3d}  {net.size}")
