import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import tree_measures
from entropy_lab.essential import (
    BudgetError,
    count_admissible,
    cone_energy,
    enumerate_admissible_subtrees,
    essential_approximation_error,
    essential_subtree,
    level_profiles,
    verify_size_bounds,
)
from entropy_lab.operators import Subtree, residual_norm_sq
from entropy_lab.tree import ROOT, NodeId, TreeMeasure, children, variation

# Admissible subtree counts for n = 0..10, produced by count_by_generating_function.
FROZEN_COUNTS = [1, 3, 8, 20, 50, 124, 308, 760, 1869, 4569, 11117]


def count_by_generating_function(n):
    """Count subtrees with sum of terminal levels <= n, independently of the enumerator.

    c_d[k] counts subtrees hanging from a level-d node whose terminal levels
    sum to k: the node is terminal (cost d), or keeps one of its two
    children, or keeps both.
    """
    def conv(a, b):
        out = [0] * (n + 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b[: n + 1 - i]):
                    out[i + j] += x * y
        return out

    c = [0] * (n + 1)  # c_{n+1} is zero below the budget
    for d in range(n, -1, -1):
        nxt = [2 * x for x in c]
        both = conv(c, c)
        c = [nxt[k] + both[k] for k in range(n + 1)]
        c[d] += 1
    return sum(c)


def test_frozen_counts_match_oracle():
    assert [count_by_generating_function(n) for n in range(11)] == FROZEN_COUNTS


@pytest.mark.parametrize("n", range(9))
def test_enumeration_matches_oracle(n):
    assert count_admissible(n) == FROZEN_COUNTS[n]
    assert FROZEN_COUNTS[n] <= (4 * math.e) ** n


def test_small_families_by_hand():
    assert enumerate_admissible_subtrees(0) == [Subtree.root_only()]
    one = {s.nodes for s in enumerate_admissible_subtrees(1)}
    assert one == {
        frozenset({ROOT}),
        frozenset({ROOT, NodeId(1, 0)}),
        frozenset({ROOT, NodeId(1, 1)}),
    }
    two = enumerate_admissible_subtrees(2)
    chains = [s for s in two if len(s) == 3 and s.level_counts().get(2) == 1]
    assert len(two) == 8 and len(chains) == 4
    assert Subtree.from_terminal([NodeId(1, 0), NodeId(1, 1)]) in two


def test_enumeration_budget():
    with pytest.raises(BudgetError):
        enumerate_admissible_subtrees(13)


def test_profiles_respect_budget():
    for profile in level_profiles(7):
        assert sum(l * q for l, q in profile.items()) <= 7
        assert all(q <= 2**l for l, q in profile.items())


def test_point_mass_at_root():
    res = essential_subtree(TreeMeasure.delta(ROOT), 3)
    assert res.upsilon == Subtree.root_only()
    assert set(res.boundary) == set(children(ROOT))
    assert verify_size_bounds(res) == (0, 1)


def test_uniform_leaves():
    mu = TreeMeasure({NodeId(8, i): 2.0**-8 for i in range(256)})
    res = essential_subtree(mu, 8)
    assert res.upsilon.nodes == {ROOT, NodeId(1, 0), NodeId(1, 1)}
    assert set(res.boundary) == {NodeId(2, i) for i in range(4)}
    assert set(res.upsilon.terminal) == {NodeId(1, 0), NodeId(1, 1)}
    assert verify_size_bounds(res) == (2, 3)


def test_zero_measure():
    res = essential_subtree(TreeMeasure.zero(), 5)
    assert len(res.upsilon) == 0 and res.boundary == (ROOT,)


def test_tie_stops_growth():
    # variation 1/2 at level 1 with n = 2 equals the threshold exactly
    mu = TreeMeasure({NodeId(1, 0): 0.5, NodeId(1, 1): -0.5})
    assert essential_subtree(mu, 2).upsilon == Subtree.root_only()


def test_rejects_measures_outside_unit_ball():
    with pytest.raises(ValueError):
        essential_subtree(TreeMeasure.delta(ROOT).scale(1.5), 4)
    with pytest.raises(ValueError):
        essential_subtree(TreeMeasure.delta(ROOT), 0)


def test_point_mass_residual():
    s = NodeId(8, 77)
    assert essential_approximation_error(TreeMeasure.delta(ROOT), 6) == 0.0
    # the branch is kept through level 3 (1 > l/4 fails at l = 4)
    expected = sum(Fraction(1, (1 + l) ** 2) for l in range(4, 9))
    assert essential_approximation_error(TreeMeasure.delta(s), 4) == pytest.approx(float(expected), rel=1e-14)
    assert float(expected) == pytest.approx(0.1161566, abs=1e-7)


@given(tree_measures(max_level=12, max_atoms=20, unit=True), st.integers(1, 20))
def test_essential_subtree_properties(mu, n):
    res = essential_subtree(mu, n)
    levels, size = verify_size_bounds(res)
    assert levels <= n and size <= n + 1
    for t in res.upsilon:
        assert variation(mu, t) > t.level / n
    for t in res.boundary:
        assert variation(mu, t) <= t.level / n
    assert residual_norm_sq(mu, res.upsilon, 2.0) <= 1.0 / n + 1e-12


@given(tree_measures(max_level=10, max_atoms=15, unit=True), st.integers(1, 12))
def test_boundary_cone_energy(mu, n):
    # residual splits into cone energies below the stopped nodes
    res = essential_subtree(mu, n)
    parts = math.fsum(cone_energy(mu, t, 2.0) for t in res.boundary)
    assert parts == pytest.approx(residual_norm_sq(mu, res.upsilon, 2.0), abs=1e-14)
