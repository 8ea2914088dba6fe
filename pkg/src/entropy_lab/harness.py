"""Seeded experiment runner.

Every random draw of trial ``k`` at parameter ``n`` comes from the counter
stream ``CounterStream.for_trial(seed, k, channel=n)``, so a trial's numbers
do not depend on how many workers run or in which order.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

from .essential import (
    enumerate_admissible_subtrees,
    essential_subtree,
    verify_size_bounds,
)
from .nets import (
    BranchCloud,
    combined_net,
    combined_size_bound,
    dn_net_bound,
    fit_exponent,
    greedy_cover,
    packing_family,
    tree_member_net,
)
from .operators import apply_vstar, residual_norm_sq
from .quadrature import QuadratureConfig, QuadratureError
from .rng import CounterStream
from .tree import NodeId, TreeMeasure
from .volterra import (
    IntervalMeasure,
    KernelConfig,
    approximation_error,
    auxiliary_partition,
    kernel_norm_sq,
    modulus_check,
    negative_dependence,
    split_norm_bound,
)

log = logging.getLogger(__name__)

KINDS = ("tree-approx", "tree-scaling", "subtree-count", "volterra-check", "volterra-approx", "nets")
DEFAULT_BETA = {
    "tree-approx": 2.0,
    "tree-scaling": 1.5,
    "subtree-count": 2.0,
    "volterra-check": 1.0,
    "volterra-approx": 1.0,
    "nets": 2.0,
}
FLOAT_SLACK = 1e-12

EXIT_OK = 0
EXIT_VIOLATION = 2
EXIT_QUADRATURE = 3


@dataclass
class ExperimentSpec:
    kind: str
    n_values: list[int]
    beta: float | None = None
    trials: int = 100
    seed: int = 42
    tol: float = 1e-8
    out: str | None = None
    depth: int = 14
    max_atoms: int | None = None
    r: float = 0.1
    delta: float = 1e-3

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}; choose from {KINDS}")
        if not self.n_values:
            raise ValueError("n_values must be nonempty")
        if self.beta is None:
            self.beta = DEFAULT_BETA[self.kind]
        if self.max_atoms is None:
            self.max_atoms = 8 if self.kind.startswith("volterra") else 50
        if self.trials < 0:
            raise ValueError("trials must be non-negative")


@dataclass
class ExperimentReport:
    spec: dict
    records: list[dict] = field(default_factory=list)
    aggregate: dict = field(default_factory=dict)
    quadrature_failures: int = 0
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(r["pass"] for r in self.records)

    @property
    def exit_code(self) -> int:
        attempted = self.aggregate.get("quadrature_trials", 0)
        if attempted and self.quadrature_failures >= attempted:
            return EXIT_QUADRATURE
        return EXIT_OK if self.passed else EXIT_VIOLATION

    def to_json(self) -> str:
        return json.dumps(_clean(asdict(self)), indent=1, sort_keys=True)

    def write(self, out_dir: str | os.PathLike) -> tuple[Path, Path]:
        out = Path(out_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
            report_path = out / "report.json"
            report_path.write_text(self.to_json() + "\n")
            table_path = out / "table.csv"
            with open(table_path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["kind", "n", "trial", "value", "bound", "pass"])
                for r in self.records:
                    writer.writerow([r["kind"], r["n"], r["trial"], repr(r["value"]),
                                     repr(r["bound"]), int(r["pass"])])
        except OSError as exc:
            raise OSError(f"cannot write report to {out}: {exc}") from exc
        return report_path, table_path


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _record(kind: str, n: int, trial: int, value: float, bound: float, ok: bool | None = None) -> dict:
    if ok is None:
        ok = value <= bound
    return {"kind": kind, "n": n, "trial": trial, "value": float(value),
            "bound": float(bound), "pass": bool(ok)}


# --- random measures ---------------------------------------------------------


def random_tree_measure(stream: CounterStream, max_depth: int, atoms: int) -> TreeMeasure:
    """``atoms`` uniform random nodes of level <= max_depth, signed masses, ||mu||_1 = 1."""
    if atoms < 1:
        raise ValueError("need at least one atom")
    raw: dict[NodeId, float] = {}
    while True:
        for _ in range(atoms):
            level = stream.below(max_depth + 1)
            t = NodeId(level, stream.bits(level))
            raw[t] = raw.get(t, 0.0) + stream.sign() * (1.0 - stream.uniform())
        mu = TreeMeasure(raw)
        total = mu.norm1()
        if total > 0:
            return mu.scale(1.0 / total)


def random_interval_measure(stream: CounterStream, r: float, atoms: int) -> IntervalMeasure:
    """``atoms`` uniform points of (0, r] with signed masses, ||mu||_1 = 1."""
    if atoms < 1:
        raise ValueError("need at least one atom")
    pts = [(r * (1.0 - stream.uniform()), stream.sign() * (1.0 - stream.uniform()))
           for _ in range(atoms)]
    total = math.fsum(abs(m) for _, m in pts)
    return IntervalMeasure([(x, m / total) for x, m in pts])


# --- trial functions (top level so worker processes can import them) ---------


def _tree_approx_trial(spec: ExperimentSpec, n: int, trial: int) -> list[dict]:
    stream = CounterStream.for_trial(spec.seed, trial, channel=n)
    mu = random_tree_measure(stream, 2 * n, stream.integer(1, spec.max_atoms))
    ess = essential_subtree(mu, n)
    levels, size = verify_size_bounds(ess)
    res = residual_norm_sq(mu, ess.upsilon, spec.beta)
    return [
        _record("terminal-levels", n, trial, levels, n),
        _record("subtree-size", n, trial, size, n + 1),
        _record("residual-sq", n, trial, res, 1.0 / n, res <= 1.0 / n + FLOAT_SLACK),
    ]


def _volterra_approx_trial(spec: ExperimentSpec, n: int, trial: int) -> list[dict]:
    cfg = KernelConfig(spec.r, spec.beta)
    quad = QuadratureConfig(abs_tol=spec.tol)
    stream = CounterStream.for_trial(spec.seed, trial, channel=n)
    mu = random_interval_measure(stream, spec.r, stream.integer(1, spec.max_atoms))
    try:
        ae = approximation_error(mu, n, cfg, quad)
        part = ae.partition
        split = split_norm_bound(part, auxiliary_partition(part, n), n, cfg, quad, mu=mu)
    except QuadratureError as exc:
        log.warning("quadrature failure at n=%d trial=%d: %s", n, trial, exc)
        return [{"kind": "quadrature-failure", "n": n, "trial": trial, "value": math.nan,
                 "bound": math.nan, "pass": True, "quadrature_error": str(exc)}]
    return [
        _record("approx-error", n, trial, ae.err, ae.bound + 1e-6),
        _record("approx-error-plus-sq", n, trial, ae.err_plus**2, ae.diag_bound + 1e-6),
        _record("partition-size", n, trial, len(part), 2 * (n + 1)),
        _record("terminal-levels", n, trial, part.terminal_level_sum(), n),
        _record("rank", n, trial, split.rank, 2 * (n + 1)),
        _record("split-norm", n, trial, split.applied, split.bound + 1e-6),
        _record("split-opnorm", n, trial, split.norm, split.bound + 1e-6),
    ]


def _parallel_map(fn: Callable, spec: ExperimentSpec, tasks: list[tuple[int, int]]) -> list[list[dict]]:
    threads = max(1, int(os.environ.get("ENTROPY_LAB_THREADS", "1")))
    if threads == 1 or len(tasks) < 2:
        return [fn(spec, n, k) for n, k in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, [spec] * len(tasks), *zip(*tasks), chunksize=16))


# --- experiment kinds -----------------------------------------------------------


def _run_tree_approx(spec, report):
    tasks = [(n, k) for n in spec.n_values for k in range(spec.trials)]
    for recs in _parallel_map(_tree_approx_trial, spec, tasks):
        report.records.extend(recs)


def _run_tree_scaling(spec, report):
    cloud = BranchCloud(spec.depth, spec.beta)
    ns, radii = [], []
    for n in spec.n_values:
        cover = greedy_cover(cloud, 2 ** (n - 1))
        ns.append(n)
        radii.append(cover.radius)
        report.records.append(
            _record("greedy-radius", n, 0, cover.radius, dn_net_bound(n, spec.beta, spec.depth))
        )
        if n >= 2:
            # D_{n-2} has 2^{n-1} - 1 centers, and greedy is within twice the optimum.
            report.records.append(
                _record("greedy-2approx", n, 0, cover.radius,
                        2.0 * dn_net_bound(n - 2, spec.beta, spec.depth) + FLOAT_SLACK)
            )
    if len(ns) >= 3:
        fit = fit_exponent(ns, radii)
        target = -(spec.beta - 1.0) / 2.0
        report.aggregate["fit"] = asdict(fit)
        report.aggregate["target_slope"] = target
        report.records.append(
            _record("fitted-slope", 0, 0, abs(fit.slope - target), 0.15)
        )


def _run_subtree_count(spec, report):
    counts = {}
    for n in spec.n_values:
        c = len(enumerate_admissible_subtrees(n))
        counts[str(n)] = c
        report.records.append(_record("subtree-count", n, 0, c, (4 * math.e) ** n))
    report.aggregate["counts"] = counts


def _run_volterra_check(spec, report):
    cfg = KernelConfig(spec.r, spec.beta)
    quad = QuadratureConfig(abs_tol=spec.tol)
    attempted = failures = 0

    def guarded(fn):
        nonlocal attempted, failures
        attempted += 1
        try:
            fn()
        except QuadratureError as exc:
            failures += 1
            log.warning("quadrature failure: %s", exc)

    for k, t in enumerate(_logspace(1e-6, spec.r, 20)):
        def one(k=k, t=t):
            chk = kernel_norm_sq(t, cfg, quad)
            report.records.append(
                _record("norm-oracle", 0, k, abs(chk.quadrature - chk.closed_form), spec.tol)
            )
        guarded(one)

    k = 0
    for t in [i * spec.r / 10 for i in range(10)]:
        for u in _logspace(1e-10, spec.r - t, 10):
            def one(k=k, t=t, u=u):
                chk = modulus_check(t, u, cfg, quad)
                report.records.append(_record("modulus", 0, k, chk.lhs, chk.rhs + spec.tol))
            guarded(one)
            k += 1

    for trial in range(spec.trials):
        stream = CounterStream.for_trial(spec.seed, trial)
        a, b, c, d = sorted(spec.r * (1.0 - stream.uniform()) for _ in range(4))

        def one(trial=trial, q=(a, b, c, d)):
            val = negative_dependence(*q, cfg, quad)
            report.records.append(_record("negative-dependence", 0, trial, val, spec.tol))
            degenerate = [
                negative_dependence(q[0], q[0], q[2], q[3], cfg, quad),
                negative_dependence(q[0], q[1], q[2], q[2], cfg, quad),
            ]
            worst = max(abs(v) for v in degenerate)
            report.records.append(_record("negative-dependence-degenerate", 0, trial, worst, 1e-10))
        guarded(one)

    report.quadrature_failures += failures
    report.aggregate["quadrature_trials"] = attempted


def _run_volterra_approx(spec, report):
    tasks = [(n, k) for n in spec.n_values for k in range(spec.trials)]
    for recs in _parallel_map(_volterra_approx_trial, spec, tasks):
        for r in recs:
            if r["kind"] == "quadrature-failure":
                report.quadrature_failures += 1
        report.records.extend(recs)
    report.aggregate["quadrature_trials"] = len(tasks)


def _run_nets(spec, report):
    for n in spec.n_values:
        family = enumerate_admissible_subtrees(n)
        k = 2 ** (n - 1)
        members = [tree_member_net(sub, spec.beta, k, seed=i) for i, sub in enumerate(family)]
        s1 = max(m.radius for m in members)
        net = combined_net(members, len(family))
        report.aggregate[f"n={n}"] = {"family_size": len(family), "S1": s1, "net_size": net.size}
        report.records.append(
            _record("union-size", n, 0, net.size, combined_size_bound(n, len(family)))
        )
        for trial in range(spec.trials):
            stream = CounterStream.for_trial(spec.seed, trial, channel=n)
            mu = random_tree_measure(stream, 2 * n, stream.integer(1, spec.max_atoms))
            image = apply_vstar(mu, spec.beta)
            dist = net.distance(image)
            s2 = math.sqrt(min(residual_norm_sq(mu, sub, spec.beta) for sub in family))
            report.records.append(
                _record("combined-net", n, trial, dist, s1 + n**-0.5 + 2 * spec.delta)
            )
            report.records.append(
                _record("combined-net-measured-s2", n, trial, dist, s1 + s2 + 2 * spec.delta)
            )
        if n <= 12:
            cloud, sep = packing_family(n, spec.beta)
            d = cloud.distances_from(0)[1:]
            worst = float(abs(d - sep).max()) if len(d) else 0.0
            report.records.append(_record("packing-distance", n, 0, worst, 1e-12))


_RUNNERS = {
    "tree-approx": _run_tree_approx,
    "tree-scaling": _run_tree_scaling,
    "subtree-count": _run_subtree_count,
    "volterra-check": _run_volterra_check,
    "volterra-approx": _run_volterra_approx,
    "nets": _run_nets,
}


def _logspace(lo: float, hi: float, num: int) -> list[float]:
    a, b = math.log(lo), math.log(hi)
    pts = [math.exp(a + (b - a) * i / (num - 1)) for i in range(num - 1)]
    return pts + [hi]


def run(spec: ExperimentSpec) -> ExperimentReport:
    """Run one experiment; write report.json and table.csv when ``spec.out`` is set."""
    start = time.perf_counter()
    report = ExperimentReport(spec=asdict(spec))
    _RUNNERS[spec.kind](spec, report)
    by_kind: dict[str, dict] = {}
    for r in report.records:
        if r["kind"] == "quadrature-failure":
            continue
        agg = by_kind.setdefault(r["kind"], {"count": 0, "failures": 0, "max_ratio": 0.0})
        agg["count"] += 1
        agg["failures"] += not r["pass"]
        if r["bound"] > 0 and math.isfinite(r["bound"]):
            agg["max_ratio"] = max(agg["max_ratio"], r["value"] / r["bound"])
    report.aggregate["checks"] = by_kind
    report.wall_time = time.perf_counter() - start
    if spec.out:
        report.write(spec.out)
    return report
