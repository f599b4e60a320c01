"""Free outgoing resolvent in d = 3 by direct Green's-function summation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid

__all__ = ["OracleSolution", "free_resolvent_convolution", "green_kernel", "MAX_SUPPORT", "MAX_N"]

MAX_SUPPORT = 1000
MAX_N = 64


@dataclass(frozen=True)
class OracleSolution:
    u: np.ndarray
    k: complex


def wavenumber(lam: float, eps: float) -> complex:
    """k = sqrt(lambda + i eps) on the branch with Im k >= 0, Re k > 0."""
    k = np.sqrt(complex(lam, eps))
    return -k if k.imag < 0 else k


def green_kernel(r: np.ndarray, k: complex) -> np.ndarray:
    """G(r) = -exp(ikr) / (4 pi r), so (Delta + k^2) G = delta."""
    return -np.exp(1j * k * r) / (4 * np.pi * r)


def self_cell(k: complex, h: float) -> complex:
    """Integral of G over the ball of volume h^3 centred at the source."""
    a = (3 / (4 * np.pi)) ** (1 / 3) * h
    return -(np.exp(1j * k * a) * (a / (1j * k) + 1 / k**2) - 1 / k**2)


def free_resolvent_convolution(f: np.ndarray, lam: float, eps: float, grid: Grid) -> OracleSolution:
    """u(x) = sum_y G(x - y) f(y) h^3, summed source cell by source cell.

    The kernel is tabulated once on all lattice offsets; every source cell
    adds a shifted window of that table, so the result is the plain direct
    sum accumulated in a fixed order.
    """
    if grid.d != 3:
        raise ValueError(f"the free-space oracle is only available for d = 3, got d = {grid.d}")
    if not eps > 0:
        raise ValueError("the oracle needs eps > 0")
    if grid.n > MAX_N:
        raise ValueError(f"oracle limited to grids of at most {MAX_N}^3 nodes")
    f = np.asarray(f, dtype=complex).reshape(grid.shape)
    k = wavenumber(lam, eps)
    n, h = grid.n, grid.h
    u = np.zeros(grid.shape, dtype=complex)
    support = np.argwhere(f != 0)
    if len(support) == 0:
        return OracleSolution(u, k)
    if len(support) > MAX_SUPPORT:
        raise ValueError(f"source support has {len(support)} cells, limit {MAX_SUPPORT}")
    o = np.arange(-(n - 1), n) * h
    R = np.sqrt(o[:, None, None] ** 2 + o[None, :, None] ** 2 + o[None, None, :] ** 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        G = green_kernel(R, k) * h**3
    G[n - 1, n - 1, n - 1] = self_cell(k, h)
    for i, j, l in support:
        u += f[i, j, l] * G[n - 1 - i:2 * n - 1 - i, n - 1 - j:2 * n - 1 - j, n - 1 - l:2 * n - 1 - l]
    return OracleSolution(u, k)
