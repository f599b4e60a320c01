"""Truncated tensor-product grids, dyadic annuli and sphere shells."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "Grid",
    "DyadicDecomposition",
    "SphereShell",
    "build_grid",
    "dyadic_decomposition",
    "sphere_shell",
]


@dataclass(frozen=True)
class Grid:
    """Uniform lattice on the box [-L, L]^d.

    With ``offset`` the nodes sit at ``-L + (k + 1/2) h`` so that no node
    coincides with the origin; otherwise at ``-L + k h``.  Arrays sampled on
    the grid have shape ``(n,) * d`` in C order.
    """

    d: int
    L: float
    n: int
    offset: bool = True

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n**self.d

    @property
    def cell_volume(self) -> float:
        return self.h**self.d

    @cached_property
    def axis(self) -> np.ndarray:
        k = np.arange(self.n, dtype=float)
        if self.offset:
            k = k + 0.5
        return -self.L + k * self.h

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Broadcastable coordinate arrays, one per axis."""
        out = []
        for j in range(self.d):
            shape = [1] * self.d
            shape[j] = self.n
            out.append(self.axis.reshape(shape))
        return tuple(out)

    @cached_property
    def radius(self) -> np.ndarray:
        r2 = np.zeros(self.shape)
        for c in self.coords:
            r2 = r2 + c * c
        return np.sqrt(r2)

    def full_coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.broadcast_to(c, self.shape) for c in self.coords)

    def integrate(self, values: np.ndarray, mask: np.ndarray | None = None) -> float:
        """Plain cell sum ``sum(values) * h^d``, optionally over a node mask."""
        if mask is not None:
            values = values[mask]
        return float(np.sum(values) * self.cell_volume)


def build_grid(d: int, L: float, n: int, offset: bool = True) -> Grid:
    if int(d) != d or d < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {d}")
    if not L > 0:
        raise ValueError(f"half-width must be positive, got {L}")
    if int(n) != n or n < 4:
        raise ValueError(f"need at least 4 points per axis, got {n}")
    if n % 2:
        raise ValueError(f"n must be even (an odd offset grid puts a node at 0), got {n}")
    return Grid(int(d), float(L), int(n), bool(offset))


def _dyadic_index(r: np.ndarray) -> np.ndarray:
    # smallest j with r <= 2^j, exact at powers of two
    m, e = np.frexp(r)
    return np.where(m == 0.5, e - 1, e).astype(int)


@dataclass(frozen=True)
class DyadicDecomposition:
    """Assignment of grid nodes to the annuli C(j) = {2^(j-1) <= |x| <= 2^j}.

    ``labels`` holds the annulus index of every node; nodes of the core
    (|x| < 2^(j_min - 1)) carry ``core_label``.  ``j_max`` is the outermost
    annulus contained in the box (2^j_max >= L); corner nodes of the cube
    land in annuli up to ``j_last``.
    """

    j_min: int
    j_max: int
    j_last: int
    labels: np.ndarray
    core_label: int = field(default=-(10**6))

    def annulus(self, j: int) -> np.ndarray:
        return self.labels == j

    @property
    def core(self) -> np.ndarray:
        return self.labels == self.core_label

    @property
    def indices(self) -> range:
        return range(self.j_min, self.j_last + 1)

    def volumes(self, grid: Grid) -> dict[int, float]:
        return {j: float(np.count_nonzero(self.annulus(j))) * grid.cell_volume for j in self.indices}


def dyadic_decomposition(grid: Grid, j_min: int | None = None) -> DyadicDecomposition:
    r = grid.radius
    with np.errstate(divide="ignore"):
        labels = _dyadic_index(r)
    inner = int(_dyadic_index(np.array([max(float(r.min()), np.finfo(float).tiny)]))[0])
    if j_min is None:
        j_min = inner
    j_max = int(np.ceil(np.log2(grid.L)))
    j_last = int(labels.max())
    core_label = DyadicDecomposition.core_label
    labels = np.where(r < 2.0 ** (j_min - 1), core_label, np.maximum(labels, j_min))
    return DyadicDecomposition(int(j_min), j_max, j_last, labels)


@dataclass(frozen=True)
class SphereShell:
    """Nodes with |x| in [R - h/2, R + h/2); each carries weight h^(d-1)."""

    R: float
    nodes: np.ndarray
    weight: float

    def integrate(self, values: np.ndarray) -> float:
        return float(np.sum(values[self.nodes]) * self.weight)


def sphere_shell(grid: Grid, R: float) -> SphereShell:
    h = grid.h
    if not (h / 2 < R < grid.L):
        raise ValueError(f"shell radius {R} outside ({h / 2}, {grid.L})")
    r = grid.radius
    nodes = (r >= R - h / 2) & (r < R + h / 2)
    return SphereShell(float(R), nodes, h ** (grid.d - 1))
