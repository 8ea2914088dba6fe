"""Binary-tree addressing, level weights and sparse signed measures.

Nodes are never materialized as a tree.  A node is the pair
``(level, index)`` with ``0 <= index < 2**level``; parents, children and
ancestry are pure integer arithmetic on that pair.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, NamedTuple

# Python ints do not overflow; the cap only guards against runaway recursion
# and absurd inputs.  It must admit depth 2n for n = 64 (level 128).
MAX_LEVEL = 1024


class DepthLimitError(ValueError):
    """Raised when a node would lie deeper than :data:`MAX_LEVEL`."""


class NodeId(NamedTuple):
    level: int
    index: int

    def check(self) -> "NodeId":
        if self.level < 0 or self.level > MAX_LEVEL:
            raise DepthLimitError(f"level {self.level} outside [0, {MAX_LEVEL}]")
        if not 0 <= self.index < (1 << self.level):
            raise ValueError(f"index {self.index} invalid at level {self.level}")
        return self

    @property
    def parent(self) -> "NodeId":
        if self.level == 0:
            raise ValueError("the root has no parent")
        return NodeId(self.level - 1, self.index >> 1)

    def ancestor(self, level: int) -> "NodeId":
        """The node on the branch root -> self at the given level."""
        if not 0 <= level <= self.level:
            raise ValueError(f"no ancestor of {self} at level {level}")
        return NodeId(level, self.index >> (self.level - level))

    def branch(self) -> Iterator["NodeId"]:
        """Nodes u with u <= self, from the root down to self."""
        for lv in range(self.level + 1):
            yield NodeId(lv, self.index >> (self.level - lv))

    def precedes(self, other: "NodeId") -> bool:
        """``self <= other`` in the tree order (self is an ancestor of other or equal)."""
        if other.level < self.level:
            return False
        return (other.index >> (other.level - self.level)) == self.index

    def to_json(self) -> dict:
        return {"level": self.level, "index": self.index}


ROOT = NodeId(0, 0)


def children(t: NodeId) -> tuple[NodeId, NodeId]:
    if t.level + 1 > MAX_LEVEL:
        raise DepthLimitError(f"children of {t} exceed level cap {MAX_LEVEL}")
    return NodeId(t.level + 1, 2 * t.index), NodeId(t.level + 1, 2 * t.index + 1)


def check_beta(beta: float) -> float:
    if not beta > 1:
        raise ValueError(f"weight exponent beta must exceed 1, got {beta}")
    return float(beta)


def level_weight(level: int, beta: float) -> float:
    """w_l = (1 + l)**(-beta)."""
    return (1.0 + level) ** (-check_beta(beta))


def weight(t: NodeId, beta: float) -> float:
    return level_weight(t.level, beta)


@dataclass(frozen=True, eq=False)
class TreeMeasure:
    """Finitely supported signed measure on the binary tree.

    ``atoms`` maps nodes to nonzero masses.  Zero masses are dropped on
    construction, so ``support`` is exactly the set of keys.
    """

    atoms: Mapping[NodeId, float] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for node, m in self.atoms.items():
            node = NodeId(*node).check()
            m = float(m)
            if not math.isfinite(m):
                raise ValueError(f"non-finite mass at {node}")
            if m != 0.0:
                clean[node] = m
        object.__setattr__(self, "atoms", clean)

    @classmethod
    def delta(cls, t: NodeId | tuple[int, int], mass: float = 1.0) -> "TreeMeasure":
        return cls({NodeId(*t): mass})

    @classmethod
    def zero(cls) -> "TreeMeasure":
        return cls({})

    @property
    def support(self) -> list[NodeId]:
        return sorted(self.atoms)

    def __getitem__(self, t: NodeId) -> float:
        return self.atoms.get(t, 0.0)

    def __len__(self) -> int:
        return len(self.atoms)

    def __eq__(self, other) -> bool:
        return isinstance(other, TreeMeasure) and self.atoms == other.atoms

    def __add__(self, other: "TreeMeasure") -> "TreeMeasure":
        out = dict(self.atoms)
        for t, m in other.atoms.items():
            out[t] = out.get(t, 0.0) + m
        return TreeMeasure(out)

    def __neg__(self) -> "TreeMeasure":
        return self.scale(-1.0)

    def __sub__(self, other: "TreeMeasure") -> "TreeMeasure":
        return self + (-other)

    def scale(self, c: float) -> "TreeMeasure":
        return TreeMeasure({t: c * m for t, m in self.atoms.items()})

    def norm1(self) -> float:
        return math.fsum(abs(m) for m in self.atoms.values())

    @property
    def max_level(self) -> int:
        return max((t.level for t in self.atoms), default=0)

    @cached_property
    def cone_sums(self) -> dict[NodeId, tuple[float, float]]:
        """``{t: (s_mu(t), ||mu||(t))}`` over the ancestor closure of the support.

        One bottom-up sweep, parent += child, processed level by level in
        sorted index order so the floating-point result is reproducible.
        Nodes outside the closure have zero mass and zero variation.
        """
        if not self.atoms:
            return {}
        by_level: dict[int, dict[int, list[float]]] = {}
        for t, m in self.atoms.items():
            by_level.setdefault(t.level, {})[t.index] = [m, abs(m)]
        out: dict[NodeId, tuple[float, float]] = {}
        new = tuple.__new__  # skips NamedTuple's argument handling; hot loop
        for lv in range(max(by_level), -1, -1):
            row = by_level.get(lv, {})
            up = by_level.setdefault(lv - 1, {}) if lv > 0 else None
            for idx in sorted(row):
                s, v = row[idx]
                out[new(NodeId, (lv, idx))] = (s, v)
                if up is not None:
                    acc = up.get(idx >> 1)
                    if acc is None:
                        up[idx >> 1] = [s, v]
                    else:
                        acc[0] += s
                        acc[1] += v
        return out

    def to_json(self) -> str:
        return json.dumps(
            [{"level": t.level, "index": t.index, "mass": m} for t, m in sorted(self.atoms.items())]
        )

    @classmethod
    def from_json(cls, text: str) -> "TreeMeasure":
        atoms: dict[NodeId, float] = {}
        for rec in json.loads(text):
            t = NodeId(int(rec["level"]), int(rec["index"]))
            atoms[t] = atoms.get(t, 0.0) + float(rec["mass"])
        return cls(atoms)


def mass(mu: TreeMeasure, t: NodeId) -> float:
    """s_mu(t): signed mass of mu over the offspring cone O(t), t included."""
    return mu.cone_sums.get(t, (0.0, 0.0))[0]


def variation(mu: TreeMeasure, t: NodeId) -> float:
    """||mu||(t): total variation of mu over O(t)."""
    return mu.cone_sums.get(t, (0.0, 0.0))[1]


def hahn_split(mu: TreeMeasure) -> tuple[TreeMeasure, TreeMeasure]:
    """Atom-wise sign split ``mu = plus - minus`` with disjoint supports."""
    plus = {t: m for t, m in mu.atoms.items() if m > 0}
    minus = {t: -m for t, m in mu.atoms.items() if m < 0}
    return TreeMeasure(plus), TreeMeasure(minus)


def nodes_at_level(level: int) -> Iterable[NodeId]:
    NodeId(level, 0).check()
    return (NodeId(level, i) for i in range(1 << level))


def nodes_up_to(depth: int) -> list[NodeId]:
    """All nodes of levels 0..depth in (level, index) order."""
    return [t for lv in range(depth + 1) for t in nodes_at_level(lv)]
