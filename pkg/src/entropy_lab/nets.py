"""Covering estimates, explicit nets and scaling fits.

Entropy numbers of operator balls cannot be computed directly, so this
module works with finite clouds (extreme points such as ``{V* delta_t}``),
explicit nets whose radii are known in closed form, packing families for
lower bounds, and certified coverings of small polytopes.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from itertools import combinations, product
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .operators import Subtree, WeightedVector, apply_vstar
from .tree import NodeId, TreeMeasure, check_beta, level_weight, nodes_up_to

DELTA_SAFETY = 4.0
MATERIALIZE_LIMIT = 1_000_000
PACKING_LIMIT = 20


# --- point clouds ----------------------------------------------------------


class PointCloud:
    """Finite set of vectors in l2(T, W); distances use the weighted norm.

    Points are embedded as rows of a sparse matrix in coordinates
    ``sqrt(w(t)) x(t)``, so Euclidean geometry on rows is the weighted
    geometry on vectors.
    """

    def __init__(self, points: Sequence[WeightedVector], labels: Sequence | None = None):
        if not points:
            raise ValueError("a point cloud must be nonempty")
        betas = {p.beta for p in points}
        if len(betas) != 1:
            raise ValueError("all points must share one weight exponent")
        self.beta = betas.pop()
        self._points = list(points)
        self.labels = list(labels) if labels is not None else list(range(len(points)))
        coords = sorted({t for p in points for t in p.entries})
        col = {t: j for j, t in enumerate(coords)}
        rows, cols, vals = [], [], []
        for i, p in enumerate(points):
            for t, x in p.entries.items():
                rows.append(i)
                cols.append(col[t])
                vals.append(math.sqrt(level_weight(t.level, self.beta)) * x)
        self._matrix = sp.csr_matrix(
            (vals, (rows, cols)), shape=(len(points), max(len(coords), 1))
        )
        self._sq = np.asarray(self._matrix.multiply(self._matrix).sum(axis=1)).ravel()

    def __len__(self) -> int:
        return len(self._points)

    @property
    def points(self) -> list[WeightedVector]:
        return self._points

    def distances_from(self, i: int) -> np.ndarray:
        dots = np.asarray((self._matrix @ self._matrix[i].T).todense()).ravel()
        d2 = self._sq + self._sq[i] - 2.0 * dots
        d2[i] = 0.0
        return np.sqrt(np.maximum(d2, 0.0))


class BranchCloud(PointCloud):
    """D = {V* delta_t : |t| <= depth}, ordered by (level, index).

    V* delta_t is the indicator of the branch root -> t, so the squared
    distance between two such points is the weight of the symmetric
    difference of their branches:  C(|s|) + C(|t|) - 2 C(|s ^ t|), with C the
    cumulative level weight and ``s ^ t`` the deepest common ancestor.
    """

    MAX_DEPTH = 24

    def __init__(self, depth: int, beta: float):
        if not 0 <= depth <= self.MAX_DEPTH:
            raise ValueError(f"depth must lie in [0, {self.MAX_DEPTH}]")
        self.beta = check_beta(beta)
        self.depth = depth
        self.labels = nodes_up_to(depth)
        self._level = np.array([t.level for t in self.labels], dtype=np.int64)
        self._index = np.array([t.index for t in self.labels], dtype=np.int64)
        w = (1.0 + np.arange(depth + 1)) ** (-self.beta)
        self._cum = np.cumsum(w)

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def points(self) -> list[WeightedVector]:
        return [apply_vstar(TreeMeasure.delta(t), self.beta) for t in self.labels]

    def distances_from(self, i: int) -> np.ndarray:
        l0, i0 = self._level[i], self._index[i]
        m = np.minimum(self._level, l0)
        diff = (self._index >> (self._level - m)) ^ (i0 >> (l0 - m))
        # frexp exponent of a positive integer is its bit length
        bitlen = np.where(diff > 0, np.frexp(diff.astype(float))[1], 0)
        common = m - bitlen
        d2 = self._cum[self._level] + self._cum[l0] - 2.0 * self._cum[common]
        return np.sqrt(np.maximum(d2, 0.0))


# --- coverings -------------------------------------------------------------


@dataclass
class CoverReport:
    k: int
    radius: float
    centers: list[int]
    method: str

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def covering_radius(cloud: PointCloud, centers: Sequence[int]) -> float:
    """max over points of the distance to the nearest listed center."""
    if not centers:
        raise ValueError("at least one center is needed")
    d = cloud.distances_from(centers[0])
    for c in centers[1:]:
        d = np.minimum(d, cloud.distances_from(c))
    return float(d.max())


def greedy_cover(cloud: PointCloud, k: int) -> CoverReport:
    """Farthest-point insertion starting from point 0.

    Centers are cloud points, so the radius is a genuine covering radius for
    ``k`` balls and at most twice the optimal k-center radius.  Ties pick
    the lowest index.
    """
    if len(cloud) == 0:
        raise ValueError("empty cloud")
    if k < 1:
        raise ValueError("k must be positive")
    centers = [0]
    d = cloud.distances_from(0)
    while len(centers) < min(k, len(cloud)):
        j = int(np.argmax(d))
        if d[j] == 0.0:
            break
        centers.append(j)
        d = np.minimum(d, cloud.distances_from(j))
    return CoverReport(k=k, radius=float(d.max()), centers=centers, method="greedy")


def exhaustive_cover(cloud: PointCloud, k: int, limit: int = 200_000) -> CoverReport:
    """Optimal discrete k-center (centers among points) by trying every subset."""
    n = len(cloud)
    if n == 0:
        raise ValueError("empty cloud")
    k = min(k, n)
    if math.comb(n, k) > limit:
        raise ValueError(f"C({n},{k}) subsets exceed the exhaustive limit {limit}")
    dist = np.vstack([cloud.distances_from(i) for i in range(n)])
    best, best_c = math.inf, None
    for combo in combinations(range(n), k):
        r = float(dist[list(combo)].min(axis=0).max())
        if r < best:
            best, best_c = r, list(combo)
    return CoverReport(k=k, radius=best, centers=best_c, method="exhaustive")


def write_cover_csv(rows: Iterable[Mapping], path) -> None:
    """CSV with columns n, k, radius, bound."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["n", "k", "radius", "bound"], extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


# --- explicit nets on D ----------------------------------------------------


def tail_weight(lo: int, hi: int, beta: float) -> float:
    """sum_{l=lo}^{hi} (1+l)^-beta, summed smallest-first."""
    check_beta(beta)
    if hi < lo:
        return 0.0
    lv = np.arange(hi, lo - 1, -1, dtype=float)
    return math.fsum((1.0 + lv) ** (-beta))


def dn_net(n: int) -> list[NodeId]:
    """Nodes of the net D_n = {V* delta_t : |t| <= n}."""
    return nodes_up_to(n)


def dn_net_bound(n: int, beta: float, depth: int) -> float:
    """Covering radius of D_n over {V* delta_t : |t| <= depth}.

    The nearest net point of V* delta_t is its ancestor at level
    ``min(|t|, n)``, at squared distance ``sum_{l=n+1}^{|t|} w_l``.
    """
    if depth < n:
        raise ValueError("depth must be at least n")
    return math.sqrt(tail_weight(n + 1, depth, beta))


def packing_family(n: int, beta: float) -> tuple[PointCloud, float]:
    """Images V*(delta_{s_j} - delta_{t_j}) for the 2^n nodes t_j of level n.

    ``s_j`` is the leftmost level-2n descendant of ``t_j``.  The images are
    indicators of disjoint branch segments, hence orthogonal with equal norm;
    the returned separation is their common pairwise distance.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if n > PACKING_LIMIT:
        raise ValueError(f"packing family limited to n <= {PACKING_LIMIT}")
    points, labels = [], []
    for j in range(1 << n):
        t = NodeId(n, j)
        s = NodeId(2 * n, j << n)
        mu = TreeMeasure({s: 1.0, t: -1.0})
        points.append(apply_vstar(mu, beta))
        labels.append((t, s))
    separation = math.sqrt(2.0 * tail_weight(n + 1, 2 * n, beta))
    return PointCloud(points, labels), separation


# --- odd-integer grid net on the first levels ------------------------------


class OddGridNet:
    """All functions h on the first levels with h(t) = j(t)/n, j odd, |j| <= n.

    Any x with sup-norm at most 1 has a net element within 1/n at every node,
    hence within |Delta|/n^2 in squared weighted norm.
    """

    def __init__(self, n: int, split_depth: int | None = None, beta: float = 2.0):
        if n < 1:
            raise ValueError("n must be positive")
        if split_depth is None:
            split_depth = max(1, math.floor(math.log(n) / 4))
        if 2 ** (split_depth + 1) > 2 * n**0.25 * DELTA_SAFETY:
            raise ValueError(f"split depth {split_depth} is too large for n={n}")
        self.n = n
        self.beta = check_beta(beta)
        self.split_depth = split_depth
        self.nodes = nodes_up_to(split_depth)
        top = n if n % 2 else n - 1
        self.values = np.arange(-top, top + 1, 2) / n

    @property
    def size(self) -> int:
        return len(self.values) ** len(self.nodes)

    @property
    def size_bound(self) -> int:
        return (2 * self.n) ** len(self.nodes)

    @property
    def max_err_sq(self) -> float:
        return len(self.nodes) / self.n**2

    def nearest(self, x: Mapping[NodeId, float]) -> dict[NodeId, float]:
        out = {}
        top = int(round(self.values[-1] * self.n))
        for t in self.nodes:
            y = x.get(t, 0.0) * self.n
            j = 2 * math.floor(y / 2) + 1  # nearest odd integer, in (y-1, y+1]
            j = min(max(j, -top), top)
            out[t] = j / self.n
        return out

    def error_sq(self, x: Mapping[NodeId, float]) -> float:
        h = self.nearest(x)
        return math.fsum(
            level_weight(t.level, self.beta) * (x.get(t, 0.0) - h[t]) ** 2 for t in self.nodes
        )

    def __iter__(self) -> Iterator[dict[NodeId, float]]:
        if self.size > MATERIALIZE_LIMIT:
            raise ValueError(f"net of size {self.size} is too large to iterate")
        for combo in product(self.values, repeat=len(self.nodes)):
            yield dict(zip(self.nodes, map(float, combo)))


def h_delta_net(n: int, split_depth: int | None = None, beta: float = 2.0):
    """The odd-grid net on the first levels and its certified squared error."""
    net = OddGridNet(n, split_depth, beta)
    return net, net.max_err_sq


# --- certified covering of small polytopes ---------------------------------


def _polytope_vertices(H: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Vertices of {x : H x <= b} by brute force over d-subsets of facets."""
    m, d = H.shape
    idx = np.array(list(combinations(range(m), d)))
    A = H[idx]
    rhs = b[idx]
    det = np.linalg.det(A)
    ok = np.abs(det) > 1e-12
    if not ok.any():
        return np.empty((0, d))
    pts = np.linalg.solve(A[ok], rhs[ok][..., None])[..., 0]
    feasible = np.all(pts @ H.T <= b + tol, axis=1)
    return pts[feasible]


def aco_covering_radius(generators: np.ndarray, centers: np.ndarray) -> float:
    """Exact covering radius of ``centers`` over the absolutely convex hull.

    ``generators`` is a square invertible matrix whose columns span the hull
    ``{G c : ||c||_1 <= 1}``.  On each Voronoi cell the distance to its center
    is convex, so its maximum over (cell intersect hull) sits at a vertex.
    """
    G = np.atleast_2d(np.asarray(generators, dtype=float))
    C = np.atleast_2d(np.asarray(centers, dtype=float))
    d = G.shape[0]
    Ginv = np.linalg.inv(G)
    signs = np.array(list(product((-1.0, 1.0), repeat=d)))
    H_hull = signs @ Ginv
    b_hull = np.ones(len(signs))
    worst = 0.0
    for i, c in enumerate(C):
        others = np.delete(C, i, axis=0)
        H_vor = 2.0 * (others - c)
        b_vor = (others**2).sum(axis=1) - (c**2).sum()
        verts = _polytope_vertices(np.vstack([H_hull, H_vor]), np.concatenate([b_hull, b_vor]))
        if len(verts):
            worst = max(worst, float(np.sqrt(((verts - c) ** 2).sum(axis=1)).max()))
    return worst


@dataclass
class MemberNet:
    """A net for one family member, in weighted coordinates on ``nodes``."""

    nodes: tuple[NodeId, ...]
    centers: np.ndarray
    radius: float
    beta: float

    def __len__(self) -> int:
        return len(self.centers)


def subtree_generators(upsilon: Subtree, beta: float) -> tuple[tuple[NodeId, ...], np.ndarray]:
    """Columns sqrt(w) * V*_Y delta_u for u in Y: the extreme points of A_Y(ball)."""
    nodes = tuple(upsilon)
    pos = {t: i for i, t in enumerate(nodes)}
    G = np.zeros((len(nodes), len(nodes)))
    for j, u in enumerate(nodes):
        for t in u.branch():
            G[pos[t], j] = math.sqrt(level_weight(t.level, beta))
    return nodes, G


def tree_member_net(upsilon: Subtree, beta: float, k: int, probes: int = 400,
                    seed: int = 0) -> MemberNet:
    """A k-point net for A_Y(unit ball) with its exactly computed radius.

    Centers come from farthest-point insertion over a probe cloud (origin,
    the +-generators, random hull points); the radius is then certified over
    the whole hull, not just the probes.
    """
    nodes, G = subtree_generators(upsilon, beta)
    d = len(nodes)
    rng = np.random.default_rng(seed)
    coef = rng.dirichlet(np.ones(2 * d), size=probes)
    signed = coef[:, :d] - coef[:, d:]
    probe = np.vstack([np.zeros(d), G.T, -G.T, signed @ G.T])
    chosen = [0]
    dist = np.linalg.norm(probe - probe[0], axis=1)
    while len(chosen) < min(k, len(probe)):
        j = int(np.argmax(dist))
        chosen.append(j)
        dist = np.minimum(dist, np.linalg.norm(probe - probe[j], axis=1))
    centers = probe[chosen]
    return MemberNet(nodes, centers, aco_covering_radius(G, centers), beta)


@dataclass
class CombinedNet:
    """Union of member nets, embedded on all nodes up to ``depth``."""

    coords: tuple[NodeId, ...]
    points: np.ndarray
    beta: float
    family_size: int
    member_radii: list[float] = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.points)

    def _embed(self, vec: WeightedVector) -> tuple[np.ndarray, float]:
        pos = {t: i for i, t in enumerate(self.coords)}
        z = np.zeros(len(self.coords))
        tail = []
        for t, x in vec.entries.items():
            wx = math.sqrt(level_weight(t.level, self.beta)) * x
            if t in pos:
                z[pos[t]] = wx
            else:
                tail.append(wx * wx)
        return z, math.fsum(tail)

    def distance(self, vec: WeightedVector) -> float:
        z, tail = self._embed(vec)
        d2 = ((self.points - z) ** 2).sum(axis=1)
        return math.sqrt(float(d2.min()) + tail)


def combined_net(nets: Sequence[MemberNet], family_size: int | None = None) -> CombinedNet:
    """Union of one net per family member (no deduplication)."""
    if not nets:
        raise ValueError("no member nets")
    betas = {m.beta for m in nets}
    if len(betas) != 1:
        raise ValueError("member nets live in different weighted spaces")
    depth = max(t.level for m in nets for t in m.nodes)
    coords = tuple(nodes_up_to(depth))
    pos = {t: i for i, t in enumerate(coords)}
    blocks = []
    for m in nets:
        block = np.zeros((len(m.centers), len(coords)))
        block[:, [pos[t] for t in m.nodes]] = m.centers
        blocks.append(block)
    return CombinedNet(
        coords=coords,
        points=np.vstack(blocks),
        beta=betas.pop(),
        family_size=len(nets) if family_size is None else family_size,
        member_radii=[m.radius for m in nets],
    )


def combined_size_bound(n: int, family_size: int) -> int:
    """2^(n + floor(log2 |family|)), the size budget of a union over the family."""
    return 2 ** (n + int(math.floor(math.log2(family_size))))


# --- rates and fits --------------------------------------------------------


def reference_rate(beta: float, n: int, kind: str = "upper") -> float:
    """Rate shape (constants dropped) of the known entropy bounds.

    Tree operator (``beta > 1``): ``upper``/``lower`` are the two sides of the
    known two-sided bounds, ``hull`` the convex-hull transfer applied with
    exponent alpha = (beta-1)/2.  Volterra family (``beta > 1/2``):
    ``volterra-upper``/``volterra-lower``.  Natural logs throughout.
    """
    ln = math.log(n)
    if kind.startswith("volterra"):
        if not beta > 0.5:
            raise ValueError("volterra rates need beta > 1/2")
        if beta < 1:
            return n ** (0.5 - beta)
        if beta == 1:
            return n**-0.5 * (ln if kind == "volterra-upper" else 1.0)
        return n**-0.5 * ln ** (1 - beta)
    check_beta(beta)
    if kind == "hull":
        alpha = (beta - 1) / 2
        if alpha < 0.5:
            return n**-alpha
        if alpha == 0.5:
            return n**-0.5 * ln
        return n**-0.5 * ln ** (0.5 - alpha)
    if kind not in ("upper", "lower"):
        raise ValueError(f"unknown rate kind {kind!r}")
    if beta < 2:
        return n ** (-(beta - 1) / 2)
    if beta > 2:
        return n**-0.5 * ln ** (1 - beta / 2)
    return n**-0.5 * (ln if kind == "upper" else 1.0)


def carl_pajor_shape(k: int, m: int, norm: float) -> float:
    """ln^{1/2}(m+1) * ||W|| * k^{-1/2}; the bound holds up to a constant factor."""
    return math.sqrt(math.log(m + 1)) * norm / math.sqrt(k)


def schutt_lower_shape(k: int, m: int) -> float:
    """[ln(1 + m/k) / k]^{1/2}, valid for log2 m <= k <= m up to a constant."""
    return math.sqrt(math.log(1 + m / k) / k)


@dataclass
class ScalingFit:
    ns: list
    values: list
    slope: float
    intercept: float
    residual: float

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def fit_exponent(ns: Sequence[float], values: Sequence[float]) -> ScalingFit:
    """Least-squares line through (log n, log value)."""
    if len(ns) != len(values) or len(ns) < 3:
        raise ValueError("need at least three (n, value) pairs")
    v = np.asarray(values, dtype=float)
    if np.any(v <= 0):
        raise ValueError("values must be positive")
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(v)
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(((y - (slope * x + intercept)) ** 2).sum())
    return ScalingFit(list(ns), [float(a) for a in v], float(slope), float(intercept), resid)
