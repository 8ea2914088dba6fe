import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from entropy_lab.quadrature import QuadratureConfig
from entropy_lab.volterra import (
    DyadicPartition,
    IntervalMeasure,
    KernelCombination,
    KernelConfig,
    approximation_error,
    auxiliary_partition,
    coarsening_level,
    essential_partition,
    finite_rank_apply,
    inner_products,
    interval_bounds,
    kernel_eval,
    kernel_gram,
    kernel_inner,
    kernel_norm_sq,
    kernel_shape,
    kernel_shape_violations,
    modulus_check,
    ne_net,
    negative_dependence,
    split_norm_bound,
    vstar_apply,
)

CFG = KernelConfig()
QUAD = QuadratureConfig(abs_tol=1e-10)

# (K_a, K_b) from mpmath tanh-sinh quadrature in the original variable, 30 digits.
MPMATH_INNER = [
    (0.05, 0.07, 0.15899762722691661),
    (0.01, 0.0100001, 0.15976003751390497),
    (1e-4, 0.09, 0.0025330750369537568),
    (0.03, 0.030000001, 0.23981820469849381),
    (1e-6, 2e-6, 0.0082528748895895111),
]


def test_config_validation():
    with pytest.raises(ValueError):
        KernelConfig(r=0.2)
    with pytest.raises(ValueError):
        KernelConfig(beta=0.5)


def test_kernel_eval():
    assert kernel_eval(0.02, 0.05) == 0.0
    assert kernel_eval(0.05, 0.05) == 0.0
    t = 0.05
    assert kernel_eval(t, t - math.exp(-4)) == pytest.approx(math.exp(2) / 4, rel=1e-12)
    assert kernel_eval(t, t - math.exp(-4)) == pytest.approx(1.847264, abs=1e-6)
    assert kernel_eval(t, t - math.exp(-9)) == pytest.approx(math.exp(4.5) / 9, rel=1e-9)
    assert kernel_eval(t, t - math.exp(-9)) == pytest.approx(10.001903, abs=1e-6)
    with pytest.raises(ValueError):
        kernel_eval(0.5, 0.0)


@pytest.mark.parametrize("t, expected", [(math.exp(-4), 0.25), (math.exp(-8), 0.125)])
def test_norm_closed_form_and_quadrature(t, expected):
    chk = kernel_norm_sq(t, CFG, QUAD)
    assert chk.closed_form == pytest.approx(expected, rel=1e-14)
    assert chk.quadrature == pytest.approx(expected, abs=1e-8)


def test_norm_vanishes_at_zero():
    assert kernel_norm_sq(1e-300, CFG).closed_form < 2e-3
    assert kernel_inner(0.0, 0.05) == 0.0


@pytest.mark.parametrize("a, b, expected", MPMATH_INNER)
def test_inner_products_against_frozen_oracle(a, b, expected):
    assert kernel_inner(a, b, CFG, QUAD) == pytest.approx(expected, abs=1e-10)
    assert kernel_inner(b, a, CFG, QUAD) == kernel_inner(a, b, CFG, QUAD)


def test_inner_products_against_live_mpmath():
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 20

    def oracle(a, b):
        a, b = mp.mpf(a), mp.mpf(b)
        d = b - a
        g = lambda u: u**-0.5 / abs(mp.log(u)) if u > 0 else mp.mpf(0)
        pts = sorted({mp.mpf(0), a} | {p for p in (d, 10 * d) if 0 < p < a})
        return mp.quad(lambda u: g(u) * g(u + d), pts)

    rng = np.random.default_rng(11)
    for _ in range(5):
        a, b = sorted(rng.uniform(1e-5, 0.1, 2))
        assert kernel_inner(a, b, CFG, QUAD) == pytest.approx(float(oracle(a, b)), abs=1e-9)


def test_gram_is_symmetric_psd():
    pts = [0.001, 0.01, 0.02, 0.05, 0.1]
    G = kernel_gram(pts, CFG, QUAD)
    assert np.array_equal(G, G.T)
    assert np.linalg.eigvalsh(G).min() > -1e-12
    assert np.allclose(np.diag(G), [1 / abs(math.log(t)) for t in pts], atol=1e-9)


def test_beta_above_one():
    cfg = KernelConfig(beta=1.5)
    t = 0.04
    assert kernel_inner(t, t, cfg, QUAD) == pytest.approx(abs(math.log(t)) ** -2 / 2, abs=1e-9)


def test_modulus_examples():
    u = math.exp(-9)
    assert modulus_check(0.03, u, CFG, QUAD).rhs == pytest.approx(2 / 3, rel=1e-14)
    chk = modulus_check(0.0, u, CFG, QUAD)
    assert chk.lhs == pytest.approx(abs(math.log(u)) ** -0.5, abs=1e-8)
    assert chk.holds(1e-8)
    with pytest.raises(ValueError):
        modulus_check(0.09, 0.05)


@given(st.floats(0.0, 0.099), st.floats(1e-12, 1.0))
def test_modulus_bound_property(t, frac):
    u = max((CFG.r - t) * frac, 1e-300)
    if t + u > CFG.r:
        u = CFG.r - t
    assert modulus_check(t, u, CFG, QUAD).holds(1e-8)


def test_negative_dependence_degenerate():
    assert negative_dependence(0.01, 0.01, 0.02, 0.05) == 0.0
    assert negative_dependence(0.01, 0.02, 0.05, 0.05) == 0.0
    with pytest.raises(ValueError):
        negative_dependence(0.02, 0.01, 0.03, 0.04)


@given(st.lists(st.floats(1e-8, 0.1), min_size=4, max_size=4, unique=True))
def test_negative_dependence_property(xs):
    a, b, c, d = sorted(xs)
    assert negative_dependence(a, b, c, d, CFG, QUAD) <= 1e-8


def test_kernel_shape_below_threshold():
    assert kernel_shape_violations(CFG, umin=1e-300) == {"increasing": [], "concave": []}
    # just above e^{-2 beta} the derivative changes sign
    d1, _ = kernel_shape(np.array([math.exp(-2.0) * 1.01, math.exp(-2.0) * 0.99]))
    assert d1[0] > 0 > d1[1]


def test_shape_derivatives_match_finite_differences():
    from entropy_lab.volterra import kernel_g

    u, h = 0.01, 1e-7
    d1, d2 = kernel_shape(u)
    fd1 = (kernel_g(u + h) - kernel_g(u - h)) / (2 * h)
    fd2 = (kernel_g(u + h) - 2 * kernel_g(u) + kernel_g(u - h)) / h**2
    assert float(d1) == pytest.approx(fd1, rel=1e-6)
    assert float(d2) == pytest.approx(fd2, rel=1e-3)


# --- measures and partitions ----------------------------------------------------


def test_interval_measure_basics():
    mu = IntervalMeasure([(0.02, 0.5), (0.07, -0.25)], [(0.0, 0.01, 10.0)])
    assert mu.norm1() == pytest.approx(0.85)
    assert mu.mass_on(0.0, 0.05) == pytest.approx(0.6)
    assert mu.variation_on(0.05, 0.1) == 0.25
    plus, minus = mu.hahn_split()
    assert minus.atoms == ((0.07, 0.25),)
    assert IntervalMeasure.from_json(mu.to_json()) == mu
    with pytest.raises(ValueError):
        IntervalMeasure([(0.2, 1.0)]).check_support(0.1)


def test_single_atom_partition_chain():
    x = 0.0123
    part = essential_partition(IntervalMeasure([(x, 1.0)]), 4, CFG)
    assert len(part) == 6 <= 2 * 5
    levels = sorted(l for l, _ in part)
    assert levels == [1, 2, 3, 4, 5, 5]
    lo, hi = part.bounds(part.locate(x))
    assert part.locate(x)[0] == 5 and lo < x <= hi
    assert part.terminal_level_sum() == 4


def test_zero_measure_partition():
    part = essential_partition(IntervalMeasure(), 7, CFG)
    assert part.intervals == ((1, 0), (1, 1))


def test_partition_rejects_large_measures():
    with pytest.raises(ValueError):
        essential_partition(IntervalMeasure([(0.05, 1.5)]), 4, CFG)


def test_partition_tiling_validation():
    with pytest.raises(ValueError):
        DyadicPartition(((1, 0),), 0.1)
    part = DyadicPartition(((1, 0), (2, 2), (2, 3)), 0.1)
    assert DyadicPartition.from_json(part.to_json(), 0.1) == part
    assert interval_bounds(2, 3, 0.1) == pytest.approx((0.075, 0.1))


atomic_measures = st.lists(
    st.tuples(st.floats(1e-9, 0.1), st.floats(-1, 1).filter(lambda m: abs(m) > 1e-9)),
    min_size=1, max_size=8,
).map(lambda pts: IntervalMeasure([(x, m / math.fsum(abs(v) for _, v in pts)) for x, m in pts]))


@given(atomic_measures, st.integers(1, 40))
def test_partition_properties(mu, n):
    part = essential_partition(mu, n, CFG)
    assert len(part) <= 2 * (n + 1)
    assert part.terminal_level_sum() <= n
    assert max(l for l, _ in part) <= n + 1
    for l, i in part.divided:
        assert mu.variation_on(*interval_bounds(l, i, CFG.r)) >= l / n
    for l, i in part:
        assert (l, i) not in part.divided
        assert mu.variation_on(*interval_bounds(l, i, CFG.r)) < l / n


def test_finite_rank_examples():
    x = 0.03
    one = DyadicPartition(((0, 0),), CFG.r)
    assert finite_rank_apply(IntervalMeasure([(x, 1.0)]), one, CFG) == KernelCombination((0.0,), (1.0,))
    part = DyadicPartition(((1, 0), (1, 1)), CFG.r)
    combo = finite_rank_apply(IntervalMeasure([(0.06, 0.25), (0.08, 0.5)]), part, CFG)
    assert combo.anchors == (0.05,) and combo.coeffs == (0.75,)


@given(atomic_measures, st.integers(2, 16))
def test_finite_rank_triangle_inequality(mu, n):
    part = essential_partition(mu, n, CFG)
    combo = finite_rank_apply(mu, part, CFG)
    bound = math.fsum(abs(c) * math.sqrt(kernel_inner(t, t, CFG, QUAD)) for t, c in zip(combo.anchors, combo.coeffs))
    assert combo.norm(CFG, QUAD) <= bound + 1e-9


def test_left_endpoint_belongs_to_previous_interval():
    # intervals are (lo, hi], so an atom at a left end is anchored one interval down
    part = DyadicPartition(((2, 0), (2, 1), (1, 1)), CFG.r)
    combo = finite_rank_apply(IntervalMeasure([(0.05, 1.0)]), part, CFG)
    assert combo.anchors == (0.025,)
    # the approximant and V* agree exactly when anchors and atoms coincide
    same = KernelCombination.build([(0.025, 1.0)])
    assert (vstar_apply(IntervalMeasure([(0.025, 1.0)])) - same).norm(CFG, QUAD) == 0.0
    assert approximation_error(IntervalMeasure(), 4, CFG, QUAD).err == 0.0


def test_diag_bound_value():
    res = approximation_error(IntervalMeasure([(0.03, 1.0)]), 16, CFG, QUAD)
    assert res.diag_bound == pytest.approx(0.36067, abs=1e-5)
    assert res.bound == pytest.approx(4.8045 * 16**-0.5, abs=1e-4)
    assert res.passed


@given(atomic_measures, st.sampled_from([8, 16, 32]))
def test_approximation_error_property(mu, n):
    res = approximation_error(mu, n, CFG, QUAD)
    assert res.err <= res.bound + 1e-6
    assert res.err_plus**2 <= res.diag_bound + 1e-6
    assert res.err_minus**2 <= res.diag_bound + 1e-6
    assert res.err <= res.err_plus + res.err_minus + 1e-9


def test_coarsening_levels():
    assert coarsening_level(16) == 1
    assert [coarsening_level(n) for n in (1, 2, 17, 256, 257)] == [0, 1, 2, 2, 3]


@given(atomic_measures, st.integers(2, 64))
def test_auxiliary_partition_properties(mu, n):
    part = essential_partition(mu, n, CFG)
    aux = auxiliary_partition(part, n)
    m = coarsening_level(n)
    assert part.refines(aux)
    assert len(aux) <= 2**m <= 2 * n**0.25 + 1e-12
    for l, i in aux:
        if (l, i) not in set(part):
            assert l == m


def test_split_norm_identical_partitions():
    part = DyadicPartition(((1, 0), (1, 1)), CFG.r)
    res = split_norm_bound(part, part, 16, CFG, QUAD, mu=IntervalMeasure([(0.02, 1.0)]))
    assert res.norm == 0.0 and res.applied == 0.0 and res.rank == 2


@given(atomic_measures, st.sampled_from([8, 16, 32]))
def test_split_norm_property(mu, n):
    part = essential_partition(mu, n, CFG)
    res = split_norm_bound(part, auxiliary_partition(part, n), n, CFG, QUAD, mu=mu)
    assert res.rank == len(part) <= 2 * (n + 1)
    assert res.applied <= res.norm * mu.norm1() + 1e-9
    assert res.norm <= res.bound + 1e-6


def test_coefficient_net():
    aux = DyadicPartition(((1, 0), (1, 1)), CFG.r)
    net = ne_net(aux, 4)
    assert net.size == 49
    on_grid = IntervalMeasure([(0.02, 0.25), (0.07, -0.5)])
    assert net.nearest(on_grid) == [1, -2]
    assert net.error(on_grid, CFG, QUAD) == 0.0
    with pytest.raises(ValueError):
        ne_net(DyadicPartition(tuple((3, i) for i in range(8)), CFG.r), 4)


@given(atomic_measures)
def test_coefficient_rounding(mu):
    aux = DyadicPartition(((1, 0), (1, 1)), CFG.r)
    net = ne_net(aux, 16)
    for j, iv in zip(net.nearest(mu), aux):
        assert abs(mu.mass_on(*aux.bounds(iv)) - j / 16) <= 1 / 16 + 1e-12
    assert net.error(mu, CFG, QUAD) <= net.error_bound(CFG) + 1e-9


def test_batched_inner_products_are_batch_independent():
    pairs = np.array([[0.01, 0.02], [0.05, 0.05], [1e-7, 0.1]])
    batch = inner_products(pairs, CFG, QUAD)
    for row, val in zip(pairs, batch):
        assert kernel_inner(*row, CFG, QUAD) == val
