"""Entropy-number machinery for weighted tree summation and a singular Volterra kernel."""

from .essential import EssentialResult, enumerate_admissible_subtrees, essential_subtree
from .operators import (
    Subtree,
    WeightedVector,
    apply_v,
    apply_vstar,
    approximator_apply,
    flush_projection,
    operator_norm_sq,
    residual_norm_sq,
)
from .rng import CounterStream
from .tree import ROOT, NodeId, TreeMeasure, mass, variation
from .volterra import (
    DyadicPartition,
    IntervalMeasure,
    KernelConfig,
    essential_partition,
    kernel_eval,
    kernel_inner,
)

__version__ = "0.1.0"

__all__ = [
    "CounterStream",
    "DyadicPartition",
    "EssentialResult",
    "IntervalMeasure",
    "KernelConfig",
    "NodeId",
    "ROOT",
    "Subtree",
    "TreeMeasure",
    "WeightedVector",
    "apply_v",
    "apply_vstar",
    "approximator_apply",
    "enumerate_admissible_subtrees",
    "essential_partition",
    "essential_subtree",
    "flush_projection",
    "kernel_eval",
    "kernel_inner",
    "mass",
    "operator_norm_sq",
    "residual_norm_sq",
    "variation",
]
