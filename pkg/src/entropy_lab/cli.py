"""``entropy-lab`` command line entry point."""

from __future__ import annotations

import argparse
import logging
import sys

from .harness import KINDS, ExperimentSpec, run


def parse_n_values(text: str) -> list[int]:
    """Parse ``"3,5,8"`` or ``"0..6"`` (inclusive) or a mix of both."""
    values: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            values.extend(range(int(lo), int(hi) + 1))
        elif part:
            values.append(int(part))
    if not values:
        raise argparse.ArgumentTypeError("expected at least one n value")
    return values


DEFAULT_N = {
    "tree-approx": "8,16,32,64",
    "tree-scaling": "3..10",
    "subtree-count": "0..10",
    "volterra-check": "0",
    "volterra-approx": "8,16,32",
    "nets": "3",
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="entropy-lab",
        description="Run a seeded verification experiment and write report.json and table.csv.",
    )
    p.add_argument("kind", choices=KINDS)
    p.add_argument("--beta", type=float, default=None, help="weight exponent (kind-specific default)")
    p.add_argument("--n", dest="n_values", type=parse_n_values, default=None,
                   help="comma list of n, ranges like 3..10 allowed")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--tol", type=float, default=1e-8, help="quadrature absolute tolerance")
    p.add_argument("--depth", type=int, default=14, help="tree depth for tree-scaling")
    p.add_argument("--max-atoms", type=int, default=None)
    p.add_argument("--out", default=None, help="output directory (default: entropy-lab-out/<kind>)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    n_values = args.n_values or parse_n_values(DEFAULT_N[args.kind])
    spec = ExperimentSpec(
        kind=args.kind,
        n_values=n_values,
        beta=args.beta,
        trials=args.trials,
        seed=args.seed,
        tol=args.tol,
        out=args.out or f"entropy-lab-out/{args.kind}",
        depth=args.depth,
        max_atoms=args.max_atoms,
    )
    try:
        report = run(spec)
    except OSError as exc:
        print(f"entropy-lab: {exc}", file=sys.stderr)
        return 1
    for name, agg in sorted(report.aggregate["checks"].items()):
        status = "ok" if agg["failures"] == 0 else "FAIL"
        print(f"{name:32s} {agg['count']:7d} checks  {agg['failures']:5d} failures  "
              f"max value/bound {agg['max_ratio']:.4g}  {status}")
    if report.quadrature_failures:
        print(f"quadrature failures: {report.quadrature_failures}")
    print(f"wrote {spec.out}/report.json and table.csv in {report.wall_time:.2f}s")
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
