"""Procedural primitive point clouds and MMD-based dataset distillation."""

from ._prim3d import (
    Error,
    adaptivity_exact,
    adaptivity_proxy,
    augmented_chamfer,
    chamfer,
    count_tree_shapes,
    descriptor,
    distill,
    generate_object,
    median_heuristic,
    mmd_squared,
    read_dataset,
    read_features,
)

__all__ = [
    "Error",
    "adaptivity_exact",
    "adaptivity_proxy",
    "augmented_chamfer",
    "chamfer",
    "count_tree_shapes",
    "descriptor",
    "distill",
    "generate_object",
    "median_heuristic",
    "mmd_squared",
    "read_dataset",
    "read_features",
]
