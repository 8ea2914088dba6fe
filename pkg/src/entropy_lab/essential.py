"""n-essential subtrees and the family of admissible subtrees.

A node enters the essential subtree while its variation exceeds the
threshold ``level / n``; the first node on a branch that fails the test is
recorded as a stopped (boundary) node and its cone is not explored.  Since
``||mu||_1 <= 1`` nothing below level ``n`` can pass, so the subtree is small:
its terminal set ``Q`` has ``sum |t| <= n``.  Every subtree with that
terminal-set property is *admissible*; they are enumerated exhaustively for
small ``n``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from itertools import combinations, product
from typing import Iterator

from .operators import Subtree, residual_norm_sq
from .tree import ROOT, NodeId, TreeMeasure, children, level_weight

ENUMERATION_LIMIT = 12
NORM_SLACK = 1e-12


class BudgetError(ValueError):
    """Requested enumeration is larger than the exhaustive budget."""


@dataclass(frozen=True)
class EssentialResult:
    upsilon: Subtree
    boundary: tuple[NodeId, ...]
    n: int


def _check_unit_ball(mu: TreeMeasure) -> None:
    if mu.norm1() > 1.0 + NORM_SLACK:
        raise ValueError(f"measure must lie in the unit ball, ||mu||_1 = {mu.norm1()!r}")


def essential_subtree(mu: TreeMeasure, n: int) -> EssentialResult:
    """Grow the n-essential subtree breadth-first from the root.

    Inclusion is strict (``variation > level/n``); equality stops.  The zero
    measure stops already at the root and yields the empty subtree.  Atoms
    are routed down with the search, so only visited cones are ever summed.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    _check_unit_ball(mu)
    nodes: set[NodeId] = set()
    stopped: list[NodeId] = []
    queue = deque([(ROOT, sorted(mu.atoms.items()))])
    while queue:
        t, atoms = queue.popleft()
        if math.fsum(abs(m) for _, m in atoms) > t.level / n:
            nodes.add(t)
            left, right = [], []
            for s, m in atoms:
                if s.level > t.level:
                    bit = (s.index >> (s.level - t.level - 1)) & 1
                    (right if bit else left).append((s, m))
            a, b = children(t)
            queue.append((a, left))
            queue.append((b, right))
        else:
            stopped.append(t)
    return EssentialResult(Subtree(frozenset(nodes)), tuple(sorted(stopped)), n)


def verify_size_bounds(result: EssentialResult) -> tuple[int, int]:
    """Return ``(sum_{t in Q} |t|, |Y|)`` after checking both size bounds.

    A violation is a bug, not a data condition: the bounds are proven
    for measures in the unit ball.
    """
    sub = result.upsilon
    terminal_levels = sum(t.level for t in sub.terminal) if len(sub) else 0
    total = len(sub)
    if terminal_levels > result.n:
        raise AssertionError(f"sum of terminal levels {terminal_levels} exceeds n={result.n}")
    if total > result.n + 1:
        raise AssertionError(f"subtree size {total} exceeds n+1={result.n + 1}")
    return terminal_levels, total


def essential_approximation_error(mu: TreeMeasure, n: int, beta: float = 2.0) -> float:
    """Squared residual of the approximator built on mu's own essential subtree.

    For beta = 2 and ||mu||_1 <= 1 this is at most 1/n.
    """
    return residual_norm_sq(mu, essential_subtree(mu, n).upsilon, beta)


def cone_energy(mu: TreeMeasure, t: NodeId, beta: float) -> float:
    """sum over u in O(t) of w(u) s_mu(u)^2, by direct scan of the support closure."""
    terms = [
        level_weight(u.level, beta) * s * s
        for u, (s, _) in sorted(mu.cone_sums.items())
        if t.precedes(u)
    ]
    return math.fsum(terms)


# --- admissible family -----------------------------------------------------


def level_profiles(n: int) -> Iterator[dict[int, int]]:
    """Level profiles ``{l: q_l}`` with ``sum l*q_l <= n`` and ``q_l <= 2**l``.

    The root-only subtree is the single profile ``{0: 1}``; a terminal set
    containing the root cannot contain anything else.
    """
    yield {0: 1}

    def rec(level: int, budget: int, acc: dict[int, int]):
        if level > budget:
            if acc:
                yield dict(acc)
            return
        for q in range(min(budget // level, 1 << level) + 1):
            if q:
                acc[level] = q
            yield from rec(level + 1, budget - q * level, acc)
            acc.pop(level, None)

    yield from rec(1, n, {})


def _is_antichain(nodes: tuple[NodeId, ...], levels: list[int]) -> bool:
    chosen = set(nodes)
    for t in nodes:
        for lv in levels:
            if lv >= t.level:
                break
            if t.ancestor(lv) in chosen:
                return False
    return True


def terminal_sets_for_profile(profile: dict[int, int]) -> Iterator[tuple[NodeId, ...]]:
    """All antichains with exactly ``q_l`` nodes at each level ``l``."""
    levels = sorted(profile)
    per_level = [
        [tuple(NodeId(lv, i) for i in combo) for combo in combinations(range(1 << lv), profile[lv])]
        for lv in levels
    ]
    for parts in product(*per_level):
        nodes = tuple(t for part in parts for t in part)
        if _is_antichain(nodes, levels):
            yield nodes


def enumerate_admissible_subtrees(n: int) -> list[Subtree]:
    """Every subtree whose terminal set satisfies sum |t| <= n.

    Terminal sets are generated profile-first: pick a level profile, then
    positions on each level, keeping only antichains.  A subtree is rebuilt
    from its terminal set.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if n > ENUMERATION_LIMIT:
        raise BudgetError(f"exhaustive enumeration is limited to n <= {ENUMERATION_LIMIT}")
    seen: dict[frozenset, Subtree] = {}
    for profile in level_profiles(n):
        for q in terminal_sets_for_profile(profile):
            sub = Subtree.from_terminal(q)
            seen.setdefault(sub.nodes, sub)
    return sorted(seen.values(), key=lambda s: (len(s), sorted(s.terminal)))


def count_admissible(n: int) -> int:
    count = len(enumerate_admissible_subtrees(n))
    if count > (4 * math.e) ** n:
        raise AssertionError(f"{count} admissible subtrees exceed (4e)^{n}")
    return count
