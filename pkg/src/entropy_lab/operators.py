"""Tree-summation operators V and V* and the subtree approximators A_Y.

``V*`` maps a finitely supported measure to its cone-mass function
``t -> s_mu(t)``, an element of the weighted space l2(T, W).  ``V`` is the
branch-summation operator dual to it.  For a subtree ``Y`` the approximator
``A_Y`` first flushes every atom outside ``Y`` onto the last node of ``Y`` on
its branch, then sums cones inside ``Y``; it agrees with ``V*`` on ``Y`` and
vanishes elsewhere.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from .tree import (
    ROOT,
    NodeId,
    TreeMeasure,
    check_beta,
    children,
    level_weight,
)


@dataclass(frozen=True, eq=False)
class WeightedVector:
    """Finitely supported element of l2(T, W) with w(t) = (1+|t|)^-beta."""

    entries: Mapping[NodeId, float] = field(default_factory=dict)
    beta: float = 2.0

    def __post_init__(self):
        check_beta(self.beta)
        clean = {NodeId(*t): float(x) for t, x in self.entries.items() if x != 0.0}
        object.__setattr__(self, "entries", clean)

    def __getitem__(self, t: NodeId) -> float:
        return self.entries.get(t, 0.0)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, WeightedVector)
            and self.beta == other.beta
            and self.entries == other.entries
        )

    def __sub__(self, other: "WeightedVector") -> "WeightedVector":
        self._same_space(other)
        out = dict(self.entries)
        for t, x in other.entries.items():
            out[t] = out.get(t, 0.0) - x
        return WeightedVector(out, self.beta)

    def __add__(self, other: "WeightedVector") -> "WeightedVector":
        self._same_space(other)
        out = dict(self.entries)
        for t, x in other.entries.items():
            out[t] = out.get(t, 0.0) + x
        return WeightedVector(out, self.beta)

    def _same_space(self, other: "WeightedVector"):
        if self.beta != other.beta:
            raise ValueError("vectors live in different weighted spaces")

    def restrict(self, nodes: Iterable[NodeId]) -> "WeightedVector":
        keep = set(nodes)
        return WeightedVector({t: x for t, x in self.entries.items() if t in keep}, self.beta)

    def dot(self, other: "WeightedVector") -> float:
        """Weighted inner product sum_t w(t) x(t) y(t)."""
        self._same_space(other)
        common = sorted(set(self.entries) & set(other.entries))
        return math.fsum(
            level_weight(t.level, self.beta) * self.entries[t] * other.entries[t] for t in common
        )

    def norm_sq(self) -> float:
        return _weighted_square_sum(sorted(self.entries.items()), self.beta)

    def norm(self) -> float:
        return math.sqrt(self.norm_sq())

    def to_json(self) -> str:
        return json.dumps(
            {
                "beta": self.beta,
                "entries": [
                    {"level": t.level, "index": t.index, "value": x}
                    for t, x in sorted(self.entries.items())
                ],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "WeightedVector":
        rec = json.loads(text)
        return cls(
            {NodeId(e["level"], e["index"]): e["value"] for e in rec["entries"]}, rec["beta"]
        )


@dataclass(frozen=True, eq=False)
class Subtree:
    """Ancestor-closed finite node set.

    The empty set is admitted as a degenerate subtree (the essential
    subtree of the zero measure); its approximator is the zero operator.
    """

    nodes: frozenset

    def __post_init__(self):
        nodes = frozenset(NodeId(*t).check() for t in self.nodes)
        for t in nodes:
            if t.level > 0 and t.parent not in nodes:
                raise ValueError(f"not ancestor-closed: {t} present, parent {t.parent} missing")
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def from_terminal(cls, terminal: Iterable[NodeId]) -> "Subtree":
        nodes: set[NodeId] = set()
        for q in terminal:
            nodes.update(NodeId(*q).branch())
        return cls(frozenset(nodes))

    @classmethod
    def root_only(cls) -> "Subtree":
        return cls(frozenset({ROOT}))

    def __contains__(self, t) -> bool:
        return t in self.nodes

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self):
        return iter(sorted(self.nodes))

    def __eq__(self, other) -> bool:
        return isinstance(other, Subtree) and self.nodes == other.nodes

    def __hash__(self) -> int:
        return hash(self.nodes)

    @cached_property
    def terminal(self) -> tuple[NodeId, ...]:
        """Nodes with no child in the subtree (the set Q)."""
        return tuple(
            t for t in sorted(self.nodes) if not any(c in self.nodes for c in children(t))
        )

    @cached_property
    def boundary(self) -> tuple[NodeId, ...]:
        """Children of subtree nodes that lie outside it."""
        if not self.nodes:
            return (ROOT,)
        return tuple(
            sorted(c for t in self.nodes for c in children(t) if c not in self.nodes)
        )

    def level_counts(self) -> dict[int, int]:
        """N_l = |Y intersect T_l| for each occupied level."""
        out: dict[int, int] = {}
        for t in self.nodes:
            out[t.level] = out.get(t.level, 0) + 1
        return dict(sorted(out.items()))

    def last_node_on_branch(self, s: NodeId) -> NodeId | None:
        """z(s): deepest subtree node on the branch root -> s (None if empty)."""
        if not self.nodes:
            return None
        for lv in range(s.level, -1, -1):
            u = s.ancestor(lv)
            if u in self.nodes:
                return u
        raise AssertionError("a nonempty subtree always contains the root")

    def to_json(self) -> str:
        return json.dumps([t.to_json() for t in self.terminal])

    @classmethod
    def from_json(cls, text: str) -> "Subtree":
        return cls.from_terminal(NodeId(r["level"], r["index"]) for r in json.loads(text))


def apply_vstar(mu: TreeMeasure, beta: float, depth: int | None = None) -> WeightedVector:
    """(V* mu)(t) = s_mu(t), kept on the ancestor closure of the support."""
    if depth is None:
        depth = mu.max_level
    if mu.atoms and depth < mu.max_level:
        raise ValueError(f"depth {depth} is shallower than the support (level {mu.max_level})")
    return WeightedVector(
        {t: s for t, (s, _) in mu.cone_sums.items() if t.level <= depth}, beta
    )


def apply_v(f: Mapping[NodeId, float] | WeightedVector, t: NodeId, beta: float) -> float:
    """(V f)(t) = sum over the branch u <= t of w(u) f(u)."""
    vals = f.entries if isinstance(f, WeightedVector) else f
    return math.fsum(level_weight(u.level, beta) * vals.get(u, 0.0) for u in NodeId(*t).branch())


def operator_norm_sq(beta: float, depth: int) -> float:
    """sum_{l=0}^{depth} (1+l)^-beta: ||V||^2 on the tree truncated at ``depth``.

    Every branch of the binary tree carries the same weights, so the supremum
    over branches is the sum along any single one.
    """
    check_beta(beta)
    lv = np.arange(depth, -1, -1, dtype=float)  # smallest terms first
    return math.fsum((1.0 + lv) ** (-beta))


def _flush_target(upsilon: Subtree, s: NodeId) -> NodeId | None:
    return s if s in upsilon else upsilon.last_node_on_branch(s)


def flush_projection(mu: TreeMeasure, upsilon: Subtree) -> TreeMeasure:
    """P_Y mu: every atom outside Y moves to the last Y-node on its branch."""
    out: dict[NodeId, float] = {}
    for s, m in sorted(mu.atoms.items()):
        z = _flush_target(upsilon, s)
        if z is not None:
            out[z] = out.get(z, 0.0) + m
    return TreeMeasure(out)


def approximator_apply(mu: TreeMeasure, upsilon: Subtree, beta: float) -> WeightedVector:
    """A_Y mu = iota_Y V*_Y P_Y mu."""
    projected = flush_projection(mu, upsilon)
    # V*_Y sums cones inside Y only; P_Y mu already lives on Y, so cone sums of
    # the projected measure are exactly that.
    return WeightedVector(
        {t: s for t, (s, _) in projected.cone_sums.items() if t in upsilon}, beta
    )


def residual_norm_sq(mu: TreeMeasure, upsilon: Subtree, beta: float) -> float:
    """||(V* - A_Y) mu||^2 = sum over t outside Y of w(t) s_mu(t)^2."""
    check_beta(beta)
    sums = mu.cone_sums
    if not sums:
        return 0.0
    w = [(1.0 + l) ** (-beta) for l in range(mu.max_level + 1)]
    inside = upsilon.nodes
    # fsum is exact, so the iteration order does not matter
    return math.fsum(w[t[0]] * s * s for t, (s, _) in sums.items() if t not in inside)


def _weighted_square_sum(items: list[tuple[NodeId, float]], beta: float) -> float:
    if not items:
        return 0.0
    lv = np.fromiter((t.level for t, _ in items), dtype=float, count=len(items))
    x = np.fromiter((v for _, v in items), dtype=float, count=len(items))
    return math.fsum((1.0 + lv) ** (-beta) * x * x)
