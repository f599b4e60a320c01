"""Numerical laboratory for (grad + iA)^2 u + V1 u + V2 u + (lambda + i eps) u = f."""

from .fields import AssumptionConstants, FieldSet, compute_B, make_fields, validate_assumptions
from .grid import Grid, build_grid, dyadic_decomposition, sphere_shell
from .operator import AbsorbingLayerConfig, assemble, grad_A
from .problem import ResolventProblem, make_source
from .solver import NonConvergence, solve

__version__ = "0.1.0"

__all__ = [
    "AbsorbingLayerConfig",
    "AssumptionConstants",
    "FieldSet",
    "Grid",
    "NonConvergence",
    "ResolventProblem",
    "assemble",
    "build_grid",
    "compute_B",
    "dyadic_decomposition",
    "grad_A",
    "make_fields",
    "make_source",
    "solve",
    "sphere_shell",
    "validate_assumptions",
]
