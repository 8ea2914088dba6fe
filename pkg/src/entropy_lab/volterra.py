"""The critical Volterra kernel, dyadic essential partitions and finite-rank approximants.

The kernel is ``K_t(s) = g(t - s)`` with ``g(u) = u^{-1/2} |ln u|^{-beta}`` for
``u > 0`` and zero otherwise; ``beta = 1`` is the critical case.  All L2
quantities are assembled from the Gram matrix ``(K_a, K_b)``, each entry a
one-dimensional integral with an endpoint singularity.

Singularity removal.  For ``a <= b`` write ``(K_a, K_b) = int_0^a g(u) g(u + b - a) du``
and substitute ``u = exp(-L / y)`` with ``L = |ln a|``, ``y in (0, 1]``.  Then
``g(u) du = exp(-L / (2y)) y^(beta-2) L^(1-beta) dy`` and, for beta = 1 and a = b,
the whole integrand collapses to the constant ``1 / L``.  For a < b it is
bounded and flat at y = 0.  Everything is evaluated in log space so that
``u`` may underflow harmlessly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .quadrature import QuadratureConfig, integrate_unit

E_MINUS_2 = math.exp(-2.0)
NORM_SLACK = 1e-12


@dataclass(frozen=True)
class KernelConfig:
    r: float = 0.1
    beta: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.r < E_MINUS_2:
            raise ValueError(f"r must lie in (0, e^-2), got {self.r}")
        if not self.beta >= 1.0:
            raise ValueError(f"beta must be at least 1, got {self.beta}")


def kernel_g(u, beta: float = 1.0):
    """g(u) = u^{-1/2} |ln u|^{-beta} for u > 0, else 0 (vectorized)."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = u[pos] ** -0.5 * np.abs(np.log(u[pos])) ** -beta
    return out if out.ndim else float(out)


def _check_point(x: float, cfg: KernelConfig, name: str) -> None:
    if not 0.0 <= x <= cfg.r:
        raise ValueError(f"{name}={x} outside [0, r={cfg.r}]")


def kernel_eval(t: float, s: float, cfg: KernelConfig = KernelConfig()) -> float:
    _check_point(t, cfg, "t")
    _check_point(s, cfg, "s")
    if s >= t:
        return 0.0
    return float(kernel_g(t - s, cfg.beta))


class NormCheck(NamedTuple):
    closed_form: float
    quadrature: float


def kernel_norm_sq_closed(t: float, beta: float = 1.0) -> float:
    """int_0^t g(u)^2 du = |ln t|^(1-2 beta) / (2 beta - 1); 1/|ln t| at beta = 1."""
    if t <= 0:
        raise ValueError("t must be positive")
    return abs(math.log(t)) ** (1.0 - 2.0 * beta) / (2.0 * beta - 1.0)


def kernel_norm_sq(t: float, cfg: KernelConfig = KernelConfig(),
                   quad: QuadratureConfig = QuadratureConfig()) -> NormCheck:
    if t <= 0:
        raise ValueError("t must be positive")
    _check_point(t, cfg, "t")
    return NormCheck(kernel_norm_sq_closed(t, cfg.beta), kernel_inner(t, t, cfg, quad))


def _inner_integrand(beta: float):
    def f(y: np.ndarray, p: np.ndarray) -> np.ndarray:
        L, logd = p[:, 0], p[:, 1]
        lam = np.logaddexp(-L / y, logd)  # ln(u + d)
        return (
            np.exp(-0.5 * (L / y + lam))
            * y ** (beta - 2.0)
            * L ** (1.0 - beta)
            * np.abs(lam) ** (-beta)
        )

    return f


def inner_products(pairs: np.ndarray, cfg: KernelConfig = KernelConfig(),
                   quad: QuadratureConfig = QuadratureConfig()) -> np.ndarray:
    """(K_a, K_b) for each row (a, b) of ``pairs``, in one batched quadrature."""
    pairs = np.atleast_2d(np.asarray(pairs, dtype=float))
    lo = pairs.min(axis=1)
    hi = pairs.max(axis=1)
    if np.any(lo < 0) or np.any(hi > cfg.r):
        raise ValueError(f"kernel anchors must lie in [0, r={cfg.r}]")
    out = np.zeros(len(pairs))
    live = lo > 0
    if live.any():
        d = hi[live] - lo[live]
        with np.errstate(divide="ignore"):
            logd = np.where(d > 0, np.log(d), -np.inf)
        params = np.column_stack([-np.log(lo[live]), logd])
        vals, _ = integrate_unit(_inner_integrand(cfg.beta), params, quad)
        out[live] = vals
    return out


def kernel_inner(t1: float, t2: float, cfg: KernelConfig = KernelConfig(),
                 quad: QuadratureConfig = QuadratureConfig()) -> float:
    """(K_{t1}, K_{t2}) in L2[0, r]."""
    return float(inner_products([[t1, t2]], cfg, quad)[0])


def kernel_gram(points: Sequence[float], cfg: KernelConfig = KernelConfig(),
                quad: QuadratureConfig = QuadratureConfig()) -> np.ndarray:
    """Symmetric Gram matrix of the kernels anchored at ``points``."""
    pts = np.asarray(points, dtype=float)
    iu = np.triu_indices(len(pts))
    vals = inner_products(np.column_stack([pts[iu[0]], pts[iu[1]]]), cfg, quad)
    G = np.zeros((len(pts), len(pts)))
    G[iu] = vals
    G[(iu[1], iu[0])] = vals
    return G


class ModulusCheck(NamedTuple):
    lhs: float
    rhs: float

    def holds(self, tol: float) -> bool:
        return self.lhs <= self.rhs + tol


def modulus_check(t: float, u: float, cfg: KernelConfig = KernelConfig(),
                  quad: QuadratureConfig = QuadratureConfig()) -> ModulusCheck:
    """||K_{t+u} - K_t|| against the bound 2 |ln u|^{-1/2}."""
    if not (u > 0 and 0 <= t and t + u <= cfg.r):
        raise ValueError("need 0 <= t <= t+u <= r and u > 0")
    G = kernel_gram([t, t + u], cfg, quad)
    lhs = math.sqrt(max(G[0, 0] + G[1, 1] - 2.0 * G[0, 1], 0.0))
    return ModulusCheck(lhs, 2.0 * abs(math.log(u)) ** -0.5)


def negative_dependence(a: float, b: float, c: float, d: float,
                        cfg: KernelConfig = KernelConfig(),
                        quad: QuadratureConfig = QuadratureConfig()) -> float:
    """int_0^r (K_d - K_c)(K_b - K_a); nonpositive for ordered a <= b <= c <= d."""
    if not 0.0 <= a <= b <= c <= d <= cfg.r:
        raise ValueError("need 0 <= a <= b <= c <= d <= r")
    if a == b or c == d:
        return 0.0
    G = kernel_gram([a, b, c, d], cfg, quad)
    return float(G[3, 1] - G[3, 0] - G[2, 1] + G[2, 0])


def kernel_shape(u, beta: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Analytic (g', g'') of g on (0, 1).

    With L = |ln u|:  g' = u^{-3/2} L^{-beta} (beta/L - 1/2) and
    g'' = u^{-5/2} L^{-beta} [(beta/L - 3/2)(beta/L - 1/2) + beta/L^2].
    Both signs are fixed once L > 2 beta, i.e. u < e^{-2 beta}.
    """
    u = np.asarray(u, dtype=float)
    L = -np.log(u)
    k = beta / L
    with np.errstate(over="ignore"):  # +-inf near 0 still carries the right sign
        d1 = u**-1.5 * L**-beta * (k - 0.5)
        d2 = u**-2.5 * L**-beta * ((k - 1.5) * (k - 0.5) + beta / L**2)
    return d1, d2


def kernel_shape_violations(cfg: KernelConfig = KernelConfig(), num: int = 2000,
                            umin: float = 1e-12) -> dict[str, list[float]]:
    """Grid points of (0, r] where g fails to be strictly decreasing or convex."""
    u = np.geomspace(umin, cfg.r, num)
    d1, d2 = kernel_shape(u, cfg.beta)
    return {"increasing": u[d1 >= 0].tolist(), "concave": u[d2 <= 0].tolist()}


# --- measures on [0, r] ------------------------------------------------------


@dataclass(frozen=True)
class IntervalMeasure:
    """Finite signed measure: point atoms plus piecewise-constant densities.

    ``atoms`` holds ``(x, mass)`` pairs, ``pieces`` holds ``(a, b, density)``
    meaning density on (a, b].
    """

    atoms: tuple = ()
    pieces: tuple = ()

    def __post_init__(self):
        atoms = tuple((float(x), float(m)) for x, m in self.atoms if m != 0)
        pieces = tuple((float(a), float(b), float(p)) for a, b, p in self.pieces if p != 0)
        for a, b, _ in pieces:
            if not a < b:
                raise ValueError(f"empty density piece ({a}, {b}]")
        object.__setattr__(self, "atoms", tuple(sorted(atoms)))
        object.__setattr__(self, "pieces", pieces)

    @property
    def is_atomic(self) -> bool:
        return not self.pieces

    def norm1(self) -> float:
        return math.fsum([abs(m) for _, m in self.atoms] + [abs(p) * (b - a) for a, b, p in self.pieces])

    def _on(self, lo: float, hi: float, absolute: bool) -> float:
        terms = [abs(m) if absolute else m for x, m in self.atoms if lo < x <= hi]
        for a, b, p in self.pieces:
            overlap = min(b, hi) - max(a, lo)
            if overlap > 0:
                terms.append((abs(p) if absolute else p) * overlap)
        return math.fsum(terms)

    def mass_on(self, lo: float, hi: float) -> float:
        """mu((lo, hi])."""
        return self._on(lo, hi, absolute=False)

    def variation_on(self, lo: float, hi: float) -> float:
        """||mu||_1 on (lo, hi]."""
        return self._on(lo, hi, absolute=True)

    def hahn_split(self) -> tuple["IntervalMeasure", "IntervalMeasure"]:
        plus = IntervalMeasure(
            [(x, m) for x, m in self.atoms if m > 0], [(a, b, p) for a, b, p in self.pieces if p > 0]
        )
        minus = IntervalMeasure(
            [(x, -m) for x, m in self.atoms if m < 0], [(a, b, -p) for a, b, p in self.pieces if p < 0]
        )
        return plus, minus

    def check_support(self, r: float) -> None:
        for x, _ in self.atoms:
            if not 0.0 < x <= r:
                raise ValueError(f"atom at {x} outside (0, r={r}]")
        for a, b, _ in self.pieces:
            if a < 0 or b > r:
                raise ValueError(f"density piece ({a}, {b}] outside (0, r={r}]")

    def to_json(self) -> str:
        return json.dumps(
            {"atoms": [{"x": x, "mass": m} for x, m in self.atoms],
             "pieces": [{"a": a, "b": b, "density": p} for a, b, p in self.pieces]}
        )

    @classmethod
    def from_json(cls, text: str) -> "IntervalMeasure":
        rec = json.loads(text)
        if isinstance(rec, list):
            rec = {"atoms": rec}
        return cls(
            [(a["x"], a["mass"]) for a in rec.get("atoms", [])],
            [(p["a"], p["b"], p["density"]) for p in rec.get("pieces", [])],
        )


# --- dyadic partitions --------------------------------------------------------


def interval_bounds(level: int, index: int, r: float) -> tuple[float, float]:
    """(i r / 2^l, (i+1) r / 2^l]; endpoints agree exactly across levels."""
    scale = 2.0**-level
    return r * index * scale, r * (index + 1) * scale


@dataclass(frozen=True)
class DyadicPartition:
    """Partition of (0, r] into binary intervals ``(level, index)``.

    ``divided`` is the tree of intervals split during construction, when known.
    """

    intervals: tuple[tuple[int, int], ...]
    r: float
    divided: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple(sorted(self.intervals, key=self._order)))
        covered = math.fsum(2.0**-l for l, _ in self.intervals)
        if abs(covered - 1.0) > 1e-12:
            raise ValueError("intervals do not tile (0, r]")

    @staticmethod
    def _order(iv: tuple[int, int]) -> float:
        level, index = iv
        return index * 2.0**-level

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def bounds(self, iv: tuple[int, int]) -> tuple[float, float]:
        return interval_bounds(*iv, self.r)

    def left_end(self, iv: tuple[int, int]) -> float:
        return self.bounds(iv)[0]

    def locate(self, x: float) -> tuple[int, int]:
        for iv in self.intervals:
            lo, hi = self.bounds(iv)
            if lo < x <= hi:
                return iv
        raise ValueError(f"{x} is not in (0, r={self.r}]")

    def terminal(self) -> list[tuple[int, int]]:
        """Divided intervals neither of whose halves was divided (the set Q)."""
        return sorted(
            (l, i) for l, i in self.divided
            if (l + 1, 2 * i) not in self.divided and (l + 1, 2 * i + 1) not in self.divided
        )

    def terminal_level_sum(self) -> int:
        return sum(l for l, _ in self.terminal())

    def refines(self, coarse: "DyadicPartition") -> bool:
        """Every interval lies inside exactly one interval of ``coarse``."""
        for l, i in self.intervals:
            hits = sum(1 for L, I in coarse.intervals if L <= l and (i >> (l - L)) == I)
            if hits != 1:
                return False
        return True

    def to_json(self) -> str:
        return json.dumps([{"level": l, "index": i} for l, i in self.intervals])

    @classmethod
    def from_json(cls, text: str, r: float) -> "DyadicPartition":
        return cls(tuple((d["level"], d["index"]) for d in json.loads(text)), r)


def _check_measure(mu: IntervalMeasure, cfg: KernelConfig) -> None:
    mu.check_support(cfg.r)
    if mu.norm1() > 1.0 + NORM_SLACK:
        raise ValueError(f"measure must lie in the unit ball, ||mu||_1 = {mu.norm1()!r}")


def essential_partition(mu: IntervalMeasure, n: int,
                        cfg: KernelConfig = KernelConfig()) -> DyadicPartition:
    """Split a binary interval of level l while its variation is at least l/n.

    The level-0 interval always splits (0 >= 0).  With ||mu||_1 <= 1 no
    interval beyond level n splits, so the recursion is finite.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    _check_measure(mu, cfg)
    divided, kept = set(), []
    stack = [(0, 0)]
    while stack:
        l, i = stack.pop()
        if mu.variation_on(*interval_bounds(l, i, cfg.r)) >= l / n:
            divided.add((l, i))
            stack.extend([(l + 1, 2 * i + 1), (l + 1, 2 * i)])
        else:
            kept.append((l, i))
    return DyadicPartition(tuple(kept), cfg.r, frozenset(divided))


# --- finite-rank approximants -------------------------------------------------


@dataclass(frozen=True)
class KernelCombination:
    """Formal sum  sum_k coeffs[k] * K_{anchors[k]}  in L2[0, r]."""

    anchors: tuple[float, ...]
    coeffs: tuple[float, ...]

    @classmethod
    def build(cls, terms) -> "KernelCombination":
        acc: dict[float, float] = {}
        for t, c in terms:
            acc[t] = acc.get(t, 0.0) + c
        keys = sorted(acc)
        return cls(tuple(keys), tuple(acc[k] for k in keys))

    def __sub__(self, other: "KernelCombination") -> "KernelCombination":
        return KernelCombination.build(
            list(zip(self.anchors, self.coeffs)) + [(t, -c) for t, c in zip(other.anchors, other.coeffs)]
        )

    def norm_sq(self, cfg: KernelConfig = KernelConfig(),
                quad: QuadratureConfig = QuadratureConfig(), gram: np.ndarray | None = None) -> float:
        if not self.anchors:
            return 0.0
        G = kernel_gram(self.anchors, cfg, quad) if gram is None else gram
        c = np.asarray(self.coeffs)
        return max(float(c @ G @ c), 0.0)

    def norm(self, cfg: KernelConfig = KernelConfig(),
             quad: QuadratureConfig = QuadratureConfig()) -> float:
        return math.sqrt(self.norm_sq(cfg, quad))


def vstar_apply(mu: IntervalMeasure) -> KernelCombination:
    """V* mu = sum over atoms of mass * K_x (atomic measures only)."""
    if not mu.is_atomic:
        raise ValueError("V* images are only assembled for atomic measures")
    return KernelCombination.build(mu.atoms)


def finite_rank_apply(mu: IntervalMeasure, part: DyadicPartition,
                      cfg: KernelConfig = KernelConfig()) -> KernelCombination:
    """V*_I mu = sum over I of mu(I) K_{t_I}, t_I the left end of I.

    An anchor at 0 stands for the zero function (K_0 vanishes on (0, r]).
    """
    mu.check_support(cfg.r)
    terms = []
    for iv in part:
        lo, hi = part.bounds(iv)
        m = mu.mass_on(lo, hi)
        if m != 0.0:
            terms.append((lo, m))
    return KernelCombination.build(terms)


def _gram_norms(combos: Sequence[KernelCombination], cfg, quad) -> list[float]:
    """Norms of several combinations sharing one Gram matrix."""
    anchors = sorted({t for c in combos for t in c.anchors})
    if not anchors:
        return [0.0] * len(combos)
    pos = {t: i for i, t in enumerate(anchors)}
    G = kernel_gram(anchors, cfg, quad)
    out = []
    for c in combos:
        vec = np.zeros(len(anchors))
        for t, a in zip(c.anchors, c.coeffs):
            vec[pos[t]] += a
        out.append(math.sqrt(max(float(vec @ G @ vec), 0.0)))
    return out


@dataclass
class ApproximationError:
    err: float
    diag_bound: float
    bound: float
    err_plus: float
    err_minus: float
    partition: DyadicPartition

    @property
    def passed(self) -> bool:
        return self.err <= self.bound


def approximation_bound(n: int) -> float:
    """4 (ln 2)^{-1/2} n^{-1/2}: two sign components, each at most (4 / (n ln 2))^{1/2}."""
    return 4.0 / math.sqrt(math.log(2.0) * n)


def approximation_error(mu: IntervalMeasure, n: int, cfg: KernelConfig = KernelConfig(),
                        quad: QuadratureConfig = QuadratureConfig()) -> ApproximationError:
    """||(V* - V*_I) mu|| on mu's own n-essential partition, with its sign parts."""
    part = essential_partition(mu, n, cfg)
    plus, minus = mu.hahn_split()
    combos = [vstar_apply(m) - finite_rank_apply(m, part, cfg) for m in (mu, plus, minus)]
    err, err_plus, err_minus = _gram_norms(combos, cfg, quad)
    return ApproximationError(
        err=err,
        diag_bound=4.0 / (math.log(2.0) * n),
        bound=approximation_bound(n),
        err_plus=err_plus,
        err_minus=err_minus,
        partition=part,
    )


def coarsening_level(n: int) -> int:
    """Smallest m with 2^-m <= n^{-1/4}, i.e. 16^m >= n; then also n^{-1/4} <= 2^{1-m}."""
    if n < 1:
        raise ValueError("n must be positive")
    m = 0
    while 16**m < n:
        m += 1
    return m


def auxiliary_partition(part: DyadicPartition, n: int) -> DyadicPartition:
    """Level-m grid, with each block absorbed into a coarser interval of ``part`` when one covers it."""
    m = coarsening_level(n)
    coarse = [(l, i) for l, i in part if l <= m]
    blocks = [
        (m, j) for j in range(1 << m)
        if not any((j >> (m - l)) == i for l, i in coarse)
    ]
    return DyadicPartition(tuple(coarse + blocks), part.r)


@dataclass
class SplitNorm:
    norm: float
    bound: float
    rank: int
    applied: float | None = None


def split_norm_bound(part: DyadicPartition, aux: DyadicPartition, n: int,
                     cfg: KernelConfig = KernelConfig(), quad: QuadratureConfig = QuadratureConfig(),
                     mu: IntervalMeasure | None = None) -> SplitNorm:
    """Norm of V*_I - V*_E on measures, its bound 2 (ln n^{1/4})^{-1/2} and rank count |I|.

    For x in J (J in I, inside the block B of E) the difference maps delta_x to
    K_{t_J} - K_{t_B}, so the operator norm over the unit ball of measures is
    the largest of these finitely many norms.  With ``mu`` also report
    ||(V*_I - V*_E) mu||.
    """
    bound = 2.0 / math.sqrt(math.log(n) / 4.0) if n > 1 else math.inf
    aux_set = set(aux.intervals)
    pairs = []
    for J in part:
        if J in aux_set:
            continue
        B = aux.locate(part.bounds(J)[1])
        pairs.append((part.left_end(J), aux.left_end(B), J))
    if not pairs:
        return SplitNorm(0.0, bound, len(part), 0.0 if mu is not None else None)
    combos = [KernelCombination.build([(tj, 1.0), (tb, -1.0)]) for tj, tb, _ in pairs]
    if mu is not None:
        terms = []
        for tj, tb, J in pairs:
            mj = mu.mass_on(*part.bounds(J))
            terms += [(tj, mj), (tb, -mj)]
        combos.append(KernelCombination.build(terms))
    norms = _gram_norms(combos, cfg, quad)
    applied = norms.pop() if mu is not None else None
    return SplitNorm(max(norms), bound, len(part), applied)


class CoefficientNet:
    """Net of combinations sum_{I in E} (j_I / n) K_{t_I}, j_I in {1-n, ..., n-1}."""

    def __init__(self, aux: DyadicPartition, n: int, safety: float = 1.0):
        if n < 1:
            raise ValueError("n must be positive")
        if len(aux) > 2 * n**0.25 * safety + 1e-9:
            raise ValueError(f"|E| = {len(aux)} exceeds 2 n^(1/4) for n={n}")
        self.aux = aux
        self.n = n
        self.anchors = [aux.left_end(iv) for iv in aux]

    @property
    def size(self) -> int:
        return (2 * self.n - 1) ** len(self.aux)

    def nearest(self, mu: IntervalMeasure) -> list[int]:
        n = self.n
        return [
            min(max(round(n * mu.mass_on(*self.aux.bounds(iv))), 1 - n), n - 1)
            for iv in self.aux
        ]

    def error_bound(self, cfg: KernelConfig = KernelConfig()) -> float:
        """max_t ||K_t|| * |E| / n; the kernel norm grows with t, so the max is at r."""
        return math.sqrt(kernel_norm_sq_closed(cfg.r, cfg.beta)) * len(self.aux) / self.n

    def error(self, mu: IntervalMeasure, cfg: KernelConfig = KernelConfig(),
              quad: QuadratureConfig = QuadratureConfig()) -> float:
        """||V*_E mu - h|| for the nearest net element h."""
        j = self.nearest(mu)
        target = finite_rank_apply(mu, self.aux, cfg)
        h = KernelCombination.build([(t, ji / self.n) for t, ji in zip(self.anchors, j)])
        return (target - h).norm(cfg, quad)


def ne_net(aux: DyadicPartition, n: int, safety: float = 1.0) -> CoefficientNet:
    return CoefficientNet(aux, n, safety)
