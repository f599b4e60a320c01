"""Link-variable discretization of (grad + iA)^2 + V1 + V2 + lambda + i eps.

The edge from node x to x + h e_j carries the phase
``U_j(x) = exp(i h A_j(x + h e_j / 2))`` (gauge parts enter through exact
chi differences).  Row x of the matrix has ``U_j(x) / h^2`` in column
x + e_j and ``conj(U_j(x - e_j)) / h^2`` in column x - e_j; nodes outside the
box are zero (Dirichlet).  An optional outer layer stretches each
coordinate, d/dx -> (1/s(x)) d/dx with s = 1 + i sigma.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .fields import FieldSet, SampledFields, sample_fields
from .grid import Grid

__all__ = [
    "AbsorbingLayerConfig",
    "DiscreteOperator",
    "assemble",
    "apply",
    "link_phases",
    "grad_A",
    "split_gradient",
    "forward_differences",
    "link_energy",
    "modulus_energy",
]


@dataclass(frozen=True)
class AbsorbingLayerConfig:
    """Complex stretching in the outer ``width`` fraction of each half-axis.

    ``sigma(x) = strength * t^order / (sqrt(lambda) * width * L)`` with t the
    normalized depth into the layer, so a wave crossing the layer once is
    damped by ``exp(-strength / (order + 1))`` whatever its frequency.
    """

    width: float = 0.25
    strength: float = 8.0
    order: int = 2

    def __post_init__(self):
        if not (0 < self.width <= 0.5):
            raise ValueError(f"layer width must be in (0, 1/2], got {self.width}")
        if self.strength < 0:
            raise ValueError(f"layer strength must be >= 0, got {self.strength}")
        if self.order < 0:
            raise ValueError(f"ramp order must be >= 0, got {self.order}")

    @property
    def active(self) -> bool:
        return self.strength > 0

    def stretch(self, x: np.ndarray, L: float, lam: float) -> np.ndarray:
        if not self.active:
            return np.ones_like(x, dtype=complex)
        ell = self.width * L
        t = np.clip((np.abs(x) - (L - ell)) / ell, 0.0, None)
        sigma = self.strength * t**self.order / (np.sqrt(lam) * ell)
        return 1 + 1j * sigma

    def physical_halfwidth(self, L: float) -> float:
        return L * (1 - self.width) if self.active else L


NO_LAYER = AbsorbingLayerConfig(strength=0.0)


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    matrix: sp.csr_matrix
    grid: Grid
    fields: FieldSet
    lam: float
    eps: float
    layer: AbsorbingLayerConfig
    phases: np.ndarray
    sampled: SampledFields = field(repr=False)

    @property
    def shift(self) -> complex:
        return self.lam + 1j * self.eps

    @property
    def physical_halfwidth(self) -> float:
        return self.layer.physical_halfwidth(self.grid.L)

    @property
    def stretched(self) -> bool:
        return self.layer.active

    def __matmul__(self, u: np.ndarray) -> np.ndarray:
        return apply(self, u)

    def hermitian_part(self) -> sp.csr_matrix:
        """H = matrix - (lambda + i eps) I; Hermitian when unstretched."""
        return (self.matrix - self.shift * sp.identity(self.grid.size, format="csr")).tocsr()


def link_phases(grid: Grid, fields: FieldSet) -> np.ndarray:
    """Phase angles theta_j(x) of the links x -> x + h e_j, shape (d, *grid)."""
    d, h = grid.d, grid.h
    X = grid.coords
    A = fields.A
    theta = np.zeros((d,) + grid.shape)
    for j in range(d):
        Xm = list(X)
        Xm[j] = X[j] + h / 2
        theta[j] = h * np.broadcast_to(A.base_value(Xm)[j], grid.shape)
        if A.gauges:
            Xp = list(X)
            Xp[j] = X[j] + h
            for g in A.gauges:
                theta[j] += np.broadcast_to(g.chi(Xp) - g.chi(X), grid.shape)
    return theta


def assemble(grid: Grid, fields: FieldSet, lam: float, eps: float,
             layer: AbsorbingLayerConfig | None = None,
             sampled: SampledFields | None = None) -> DiscreteOperator:
    """Sparse matrix of the discrete resolvent operator."""
    layer = layer or NO_LAYER
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if eps < 0:
        raise ValueError(f"epsilon must be >= 0, got {eps}")
    if eps == 0 and not layer.active:
        raise ValueError("epsilon = 0 needs an absorbing layer (the truncated problem is ill-posed)")
    if fields.d != grid.d:
        raise ValueError(f"fields are {fields.d}-dimensional, grid is {grid.d}-dimensional")
    sampled = sampled or sample_fields(fields, grid)
    d, n, h = grid.d, grid.n, grid.h
    theta = link_phases(grid, fields)
    U = np.exp(1j * theta)

    x = grid.axis
    s_node = layer.stretch(x, grid.L, lam)
    s_half = layer.stretch(np.append(x - h / 2, x[-1] + h / 2), grid.L, lam)
    inv_node, inv_half = 1 / s_node, 1 / s_half

    idx = np.arange(grid.size).reshape(grid.shape)
    diag = (sampled.V1 + sampled.V2 + lam + 1j * eps).astype(complex)
    rows, cols, vals = [], [], []
    for j in range(d):
        shape = [1] * d
        shape[j] = n
        a_node = inv_node.reshape(shape)
        a_lo = inv_half[:-1].reshape(shape)
        a_hi = inv_half[1:].reshape(shape)
        diag = diag - a_node * (a_lo + a_hi) / h**2
        lo = [slice(None)] * d
        hi = [slice(None)] * d
        lo[j] = slice(0, n - 1)
        hi[j] = slice(1, n)
        lo, hi = tuple(lo), tuple(hi)
        a_link = np.broadcast_to(a_hi, grid.shape)[lo]
        fwd = U[j][lo] * np.broadcast_to(a_node, grid.shape)[lo] * a_link / h**2
        bwd = np.conj(U[j][lo]) * np.broadcast_to(a_node, grid.shape)[hi] * a_link / h**2
        rows += [idx[lo].ravel(), idx[hi].ravel()]
        cols += [idx[hi].ravel(), idx[lo].ravel()]
        vals += [fwd.ravel(), bwd.ravel()]
    rows.append(idx.ravel())
    cols.append(idx.ravel())
    vals.append(np.broadcast_to(diag, grid.shape).ravel())
    M = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(grid.size, grid.size)).tocsr()
    M.sort_indices()
    return DiscreteOperator(M, grid, fields, float(lam), float(eps), layer, theta, sampled)


def apply(op: DiscreteOperator, u: np.ndarray) -> np.ndarray:
    u = np.asarray(u)
    if u.size != op.grid.size:
        raise ValueError(f"u has {u.size} entries, grid has {op.grid.size} nodes")
    return (op.matrix @ u.ravel()).reshape(op.grid.shape)


def _shift(u: np.ndarray, axis: int, step: int) -> np.ndarray:
    """u(x + step e_axis) with zero outside the box."""
    out = np.zeros_like(u)
    n = u.shape[axis]
    src = [slice(None)] * u.ndim
    dst = [slice(None)] * u.ndim
    if step > 0:
        src[axis] = slice(step, n)
        dst[axis] = slice(0, n - step)
    else:
        src[axis] = slice(0, n + step)
        dst[axis] = slice(-step, n)
    out[tuple(dst)] = u[tuple(src)]
    return out


def _phases(u, fields, grid, phases):
    if u.shape != grid.shape:
        if u.size != grid.size:
            raise ValueError(f"u has {u.size} entries, grid has {grid.size} nodes")
        u = u.reshape(grid.shape)
    if phases is None:
        phases = link_phases(grid, fields)
    return u, phases


def grad_A(u: np.ndarray, fields: FieldSet, grid: Grid, phases: np.ndarray | None = None) -> np.ndarray:
    """Covariant gradient at the nodes: the average of the two link differences.

    ``(U_j(x) u(x + e_j) - conj(U_j(x - e_j)) u(x - e_j)) / (2h)``.
    """
    u, theta = _phases(np.asarray(u, dtype=complex), fields, grid, phases)
    h = grid.h
    g = np.empty((grid.d,) + grid.shape, dtype=complex)
    for j in range(grid.d):
        U = np.exp(1j * theta[j])
        fwd = U * _shift(u, j, 1)
        bwd = _shift(np.conj(U) * u, j, -1)
        g[j] = (fwd - bwd) / (2 * h)
    return g


def split_gradient(g: np.ndarray, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Radial component (x/|x|) . g and tangential magnitude squared."""
    r = grid.radius
    radial = sum(g[j] * (grid.coords[j] / r) for j in range(grid.d))
    total = np.sum(np.abs(g) ** 2, axis=0)
    return radial, np.maximum(total - np.abs(radial) ** 2, 0.0)


def forward_differences(u: np.ndarray, fields: FieldSet, grid: Grid,
                        phases: np.ndarray | None = None) -> np.ndarray:
    """Link differences (U_j(x) u(x + e_j) - u(x)) / h, including the links
    to the zero exterior on the upper faces."""
    u, theta = _phases(np.asarray(u, dtype=complex), fields, grid, phases)
    D = np.empty((grid.d,) + grid.shape, dtype=complex)
    for j in range(grid.d):
        D[j] = (np.exp(1j * theta[j]) * _shift(u, j, 1) - u) / grid.h
    return D


def _lower_face(u: np.ndarray, grid: Grid) -> float:
    # links from the zero exterior onto the lower faces
    s = 0.0
    for j in range(grid.d):
        sl = [slice(None)] * grid.d
        sl[j] = 0
        s += float(np.sum(np.abs(u[tuple(sl)]) ** 2)) / grid.h**2
    return s


def link_energy(u: np.ndarray, fields: FieldSet, grid: Grid, phases: np.ndarray | None = None) -> float:
    """Sum over all links of |D_A u|^2 h^d; equals -<u, Delta_A u>."""
    u = np.asarray(u, dtype=complex).reshape(grid.shape)
    D = forward_differences(u, fields, grid, phases)
    return (float(np.sum(np.abs(D) ** 2)) + _lower_face(u, grid)) * grid.cell_volume


def modulus_energy(u: np.ndarray, grid: Grid) -> float:
    """Same link sum for |u| with A = 0."""
    a = np.abs(np.asarray(u).reshape(grid.shape))
    s = 0.0
    for j in range(grid.d):
        s += float(np.sum((_shift(a, j, 1) - a) ** 2)) / grid.h**2
    return (s + _lower_face(a, grid)) * grid.cell_volume
