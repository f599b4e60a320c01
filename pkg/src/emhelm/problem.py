"""Resolvent problems: grid + fields + (lambda, eps) + data + outer layer."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .fields import FieldSet, SampledFields, sample_fields
from .grid import Grid
from .operator import AbsorbingLayerConfig, DiscreteOperator, assemble
from .solver import SolveStats, solve

__all__ = ["ResolventProblem", "make_source", "SOURCES"]

SOURCES = ("gaussian", "sheet", "point", "zero")


def make_source(kind: str, grid: Grid, **params) -> np.ndarray:
    """Right-hand sides.

    ``gaussian``: exp(-|x - c|^2 / (2 sigma^2)) cut at ``cut`` sigma
    (default 3), centre ``center`` (default origin), amplitude ``amp``.

    ``sheet``: a plane layer across axis 0 with transverse Gaussian profile
    exp(-|x'|^2 / (2 width^2)) cut at 3 width.  With ``thickness`` > 0 the
    normal profile is a Gaussian of that standard deviation normalized to
    unit discrete mass (sum times h = 1);
    otherwise the layer is the single node plane nearest x1 = 0 scaled by
    1/h (a discrete surface delta).

    ``point``: 1/h^d at the node nearest the origin.  ``zero``: f = 0.
    """
    X = grid.coords
    amp = float(params.get("amp", 1.0))
    if kind == "zero":
        return np.zeros(grid.shape, dtype=complex)
    if kind == "gaussian":
        sigma = float(params.get("sigma", 0.5))
        cut = float(params.get("cut", 3.0))
        c = params.get("center", [0.0] * grid.d)
        r2 = sum((x - ci) ** 2 for x, ci in zip(X, c))
        f = amp * np.exp(-r2 / (2 * sigma**2)) * (r2 <= (cut * sigma) ** 2)
        return np.broadcast_to(f, grid.shape).astype(complex)
    if kind == "sheet":
        width = float(params.get("width", 1.0))
        thickness = float(params.get("thickness", 0.0))
        t2 = sum(x**2 for x in X[1:])
        trans = np.exp(-t2 / (2 * width**2)) * (t2 <= (3 * width) ** 2)
        if thickness > 0:
            normal = np.exp(-X[0] ** 2 / (2 * thickness**2)) / (np.sqrt(2 * np.pi) * thickness)
            normal = normal * (np.abs(X[0]) <= 4 * thickness + grid.h)
            normal = normal / (np.sum(normal) * grid.h)
        else:
            i0 = int(np.argmin(np.abs(grid.axis)))
            normal = np.zeros_like(X[0])
            normal[i0] = 1 / grid.h
        return np.broadcast_to(amp * normal * trans, grid.shape).astype(complex)
    if kind == "point":
        f = np.zeros(grid.shape, dtype=complex)
        f[np.unravel_index(np.argmin(grid.radius), grid.shape)] = amp / grid.cell_volume
        return f
    raise ValueError(f"unknown source {kind!r}")


@dataclass(eq=False)
class ResolventProblem:
    grid: Grid
    fields: FieldSet
    lam: float
    eps: float
    f: np.ndarray
    layer: AbsorbingLayerConfig | None = None
    label: str = ""
    _sampled: SampledFields | None = field(default=None, repr=False)

    @property
    def family(self) -> str:
        return self.label or self.fields.family

    @property
    def sampled(self) -> SampledFields:
        if self._sampled is None:
            self._sampled = sample_fields(self.fields, self.grid)
        return self._sampled

    @property
    def r_max(self) -> float:
        """Radius of the ball on which diagnostics are evaluated: inside the
        physical (unstretched) region and clear of the outer faces."""
        L = self.grid.L if self.layer is None else self.layer.physical_halfwidth(self.grid.L)
        return L - self.grid.h

    @cached_property
    def operator(self) -> DiscreteOperator:
        return assemble(self.grid, self.fields, self.lam, self.eps, self.layer, self.sampled)

    def with_params(self, lam: float | None = None, eps: float | None = None) -> "ResolventProblem":
        return replace(self, lam=self.lam if lam is None else lam, eps=self.eps if eps is None else eps,
                       _sampled=self._sampled)

    def solve(self, tol: float = 1e-8, x0: np.ndarray | None = None, max_iter: int = 5000,
              method: str = "auto") -> tuple[np.ndarray, SolveStats]:
        return solve(self.operator, self.f, tol=tol, max_iter=max_iter, x0=x0, method=method)
