"""Weighted norms and functionals on grid samples.

Volume integrals are plain cell sums ``sum(.) h^d``; surface integrals use
:class:`~emhelm.grid.SphereShell`.  Suprema over the ball radius R are taken
over dyadic radii 2^j (up to the outermost node) together with the radius
``r_max`` of the region of interest, so they are lower bounds of the
continuum suprema.  ``r_max`` (default: the full box) restricts every
quantity to the nodes with |x| <= r_max, which is how the absorbing layer is
kept out of the diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fields import FieldSet
from .grid import Grid, dyadic_decomposition, sphere_shell
from .operator import grad_A, link_energy, modulus_energy, split_gradient

__all__ = [
    "NormReport",
    "ball_radii",
    "morrey_campanato",
    "morrey_campanato_grad",
    "dual_N",
    "duality_check",
    "weighted_l2",
    "surface_sup",
    "tangential_term",
    "cubic_term",
    "radiation_functional",
    "hardy_check",
    "diamagnetic_check",
    "estimate_lhs_i0",
    "norm_report",
]


def _region(grid: Grid, r_max: float | None) -> np.ndarray | None:
    return None if r_max is None else grid.radius <= r_max


def _abs2(u: np.ndarray, grid: Grid) -> np.ndarray:
    u = np.asarray(u)
    if u.shape == grid.shape:
        return np.abs(u) ** 2
    if u.shape[1:] == grid.shape:  # vector field, components first
        return np.sum(np.abs(u) ** 2, axis=0)
    return np.abs(u.reshape(grid.shape)) ** 2


def ball_radii(grid: Grid, R0: float = 0.0, r_max: float | None = None) -> list[float]:
    """Dyadic radii 2^j >= R0 reaching the outermost node, plus r_max."""
    top = float(grid.radius.max()) if r_max is None else float(r_max)
    j = math.ceil(math.log2(max(float(grid.radius.min()), R0, 1e-300)))
    radii = []
    while 2.0**j < top:
        if 2.0**j >= R0:
            radii.append(2.0**j)
        j += 1
    radii.append(2.0**j if r_max is None else top)
    return radii


def _mc(dens: np.ndarray, grid: Grid, R0: float, r_max: float | None) -> float:
    r = grid.radius
    best = 0.0
    for R in ball_radii(grid, R0, r_max):
        best = max(best, float(np.sum(dens[r <= R])) * grid.cell_volume / R)
    return math.sqrt(best)


def morrey_campanato(u: np.ndarray, grid: Grid, R0: float = 0.0, r_max: float | None = None) -> float:
    """sup_R ((1/R) int_{|x|<=R} |u|^2)^(1/2) over R >= R0 (R0 in {0, 1}).

    Vector fields (components on the leading axis) use |u|^2 = sum |u_j|^2.
    """
    return _mc(_abs2(u, grid), grid, R0, r_max)


def morrey_campanato_grad(u: np.ndarray, fields: FieldSet, grid: Grid, R0: float = 1.0,
                          r_max: float | None = None, phases: np.ndarray | None = None) -> float:
    return morrey_campanato(grad_A(u, fields, grid, phases), grid, R0, r_max)


def dual_N(f: np.ndarray, grid: Grid, R0: float = 0.0, r_max: float | None = None) -> float:
    """Dual norm: sum_{j>J} (2^(j+1) int_{C(j)} |f|^2)^(1/2) + (R0 int_{|x|<=R0} |f|^2)^(1/2),
    with 2^(J-1) <= R0 <= 2^J; for R0 = 0 the plain sum over all annuli."""
    dens = _abs2(f, grid)
    region = _region(grid, r_max)
    if region is not None:
        dens = np.where(region, dens, 0.0)
    dec = dyadic_decomposition(grid)
    hv = grid.cell_volume
    total = 0.0
    if R0 > 0:
        J = math.ceil(math.log2(R0))
        total += math.sqrt(R0 * float(np.sum(dens[grid.radius <= R0])) * hv)
        outer = grid.radius > R0
    else:
        J = -(10**9)
        outer = np.ones(grid.shape, dtype=bool)
        total += math.sqrt(float(np.sum(dens[dec.core])) * hv * 2.0**dec.j_min)
    for j in dec.indices:
        if j <= J:
            continue
        s = float(np.sum(dens[dec.annulus(j) & outer])) * hv
        total += math.sqrt(2.0 ** (j + 1) * s)
    return total


def duality_check(f: np.ndarray, g: np.ndarray, grid: Grid, R0: float = 0.0) -> tuple[float, float, bool]:
    """(int f g, |||g||| N(f), lhs <= rhs (1 + 1e-8)) for real nonnegative f, g."""
    f = np.asarray(f, dtype=float).reshape(grid.shape)
    g = np.asarray(g, dtype=float).reshape(grid.shape)
    lhs = float(np.sum(f * g)) * grid.cell_volume
    rhs = morrey_campanato(g, grid, R0) * dual_N(f, grid, R0)
    return lhs, rhs, lhs <= rhs * (1 + 1e-8)


def weighted_l2(u: np.ndarray, grid: Grid, s: float, r_max: float | None = None) -> float:
    """||(1 + |x|)^s u||; pass s < 0 for the L^2_{-|s|} norm."""
    dens = _abs2(u, grid) * (1 + grid.radius) ** (2 * s)
    return math.sqrt(grid.integrate(dens, _region(grid, r_max)))


def surface_sup(u: np.ndarray, grid: Grid, R0: float = 1.0, r_max: float | None = None) -> float:
    """sup over R of (1/R^2) int_{|x|=R} |u|^2 on R0, the dyadic radii above it,
    and the outermost admissible shell."""
    top = grid.L if r_max is None else min(r_max, grid.L)
    top -= grid.h
    radii = [R0] + [R for R in ball_radii(grid, R0, top) if R > R0]
    dens = _abs2(u, grid)
    best = 0.0
    for R in radii:
        if grid.h / 2 < R < grid.L and R <= top:
            best = max(best, sphere_shell(grid, R).integrate(dens) / R**2)
    return best


def tangential_term(u: np.ndarray, fields: FieldSet, grid: Grid, r_max: float | None = None,
                    phases: np.ndarray | None = None) -> float:
    """int |grad_A^perp u|^2 / |x|."""
    _, tan2 = split_gradient(grad_A(u, fields, grid, phases), grid)
    return grid.integrate(tan2 / grid.radius, _region(grid, r_max))


def cubic_term(u: np.ndarray, grid: Grid, r_max: float | None = None) -> float:
    """int |u|^2 / |x|^3."""
    return grid.integrate(_abs2(u, grid) / grid.radius**3, _region(grid, r_max))


def radiation_functional(u: np.ndarray, fields: FieldSet, lam: float, delta: float, grid: Grid,
                         r_max: float | None = None, phases: np.ndarray | None = None) -> float:
    """int_{1<=|x|<=r_max} |grad_A u - i lam^(1/2) (x/|x|) u|^2 (1+|x|)^(delta-1).

    ``r_max`` defaults to L - h: nodes on the outer faces see zero ghost
    values and their one-sided gradients are not meaningful.
    """
    if not (0 < delta < 2):
        raise ValueError(f"delta must lie in (0, 2), got {delta}")
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    u = np.asarray(u, dtype=complex).reshape(grid.shape)
    g = grad_A(u, fields, grid, phases)
    r = grid.radius
    k = math.sqrt(lam)
    dens = np.zeros(grid.shape)
    for j in range(grid.d):
        dens += np.abs(g[j] - 1j * k * (grid.coords[j] / r) * u) ** 2
    if r_max is None:
        r_max = grid.L - grid.h
    mask = (r >= 1) & (r <= r_max)
    return grid.integrate(dens * (1 + r) ** (delta - 1), mask)


def hardy_check(u: np.ndarray, fields: FieldSet, grid: Grid,
                phases: np.ndarray | None = None) -> tuple[float, float, bool]:
    """(int |u|^2/|x|^2, 4/(d-2)^2 int |grad_A u|^2, pass with 10h slack)."""
    if grid.d < 3:
        raise ValueError("the Hardy inequality needs d >= 3")
    lhs = grid.integrate(_abs2(u, grid) / grid.radius**2)
    rhs = 4 / (grid.d - 2) ** 2 * link_energy(u, fields, grid, phases)
    return lhs, rhs, lhs <= rhs * (1 + 10 * grid.h)


def diamagnetic_check(u: np.ndarray, fields: FieldSet, grid: Grid,
                      phases: np.ndarray | None = None) -> tuple[float, float, bool]:
    """(int |grad |u||^2, int |grad_A u|^2, pass with 10h slack)."""
    lhs = modulus_energy(u, grid)
    rhs = link_energy(u, fields, grid, phases)
    return lhs, rhs, lhs <= rhs * (1 + 10 * grid.h)


def estimate_lhs_i0(u: np.ndarray, fields: FieldSet, lam: float, grid: Grid,
                    r_max: float | None = None, phases: np.ndarray | None = None,
                    parts: bool = False):
    """lam |||u|||_1^2 + |||grad_A u|||_1^2 + int |grad_A^perp u|^2/|x|
    + sup_R (1/R^2) int_{|x|=R} |u|^2 + (d-3) int |u|^2/|x|^3."""
    if grid.d < 3:
        raise ValueError("needs d >= 3")
    u = np.asarray(u, dtype=complex).reshape(grid.shape)
    g = grad_A(u, fields, grid, phases)
    _, tan2 = split_gradient(g, grid)
    region = _region(grid, r_max)
    terms = {
        "mc1_u": lam * morrey_campanato(u, grid, 1.0, r_max) ** 2,
        "mc1_grad": morrey_campanato(g, grid, 1.0, r_max) ** 2,
        "tangential": grid.integrate(tan2 / grid.radius, region),
        "surface": surface_sup(u, grid, 1.0, r_max),
        "cubic": 0.0 if grid.d == 3 else (grid.d - 3) * cubic_term(u, grid, r_max),
    }
    total = float(sum(terms.values()))
    return (total, terms) if parts else total


@dataclass
class NormReport:
    """Named norm values of one field u (and its data f)."""

    mc: float
    mc_R0: float
    dualN: float
    dualN_R0: float
    tangential: float
    cubic: float
    wL2: dict = field(default_factory=dict)
    surface: dict = field(default_factory=dict)
    radiation: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def rows(self) -> list[tuple[str, float]]:
        out = [("mc", self.mc), ("mc_R0", self.mc_R0), ("dualN", self.dualN),
               ("dualN_R0", self.dualN_R0), ("tangential", self.tangential), ("cubic", self.cubic)]
        out += [(f"wL2(s={s:g})", v) for s, v in sorted(self.wL2.items())]
        out += [(f"surface(R={R:g})", v) for R, v in sorted(self.surface.items())]
        out += [(f"radiation(delta={d:g})", v) for d, v in sorted(self.radiation.items())]
        out += sorted(self.extra.items())
        return out


def norm_report(u: np.ndarray, f: np.ndarray, fields: FieldSet, lam: float, grid: Grid,
                deltas=(0.5, 1.0, 1.5), s_values=(-1.1,), r_max: float | None = None,
                phases: np.ndarray | None = None) -> NormReport:
    u = np.asarray(u, dtype=complex).reshape(grid.shape)
    surf = {}
    top = grid.L if r_max is None else r_max
    for R in ball_radii(grid, 1.0, top - grid.h):
        if grid.h / 2 < R < top - grid.h / 2:
            surf[R] = sphere_shell(grid, R).integrate(np.abs(u) ** 2) / R**2
    return NormReport(
        mc=morrey_campanato(u, grid, 0.0, r_max),
        mc_R0=morrey_campanato(u, grid, 1.0, r_max),
        dualN=dual_N(f, grid, 0.0, r_max),
        dualN_R0=dual_N(f, grid, 1.0, r_max),
        tangential=tangential_term(u, fields, grid, r_max, phases),
        cubic=cubic_term(u, grid, r_max),
        wL2={s: weighted_l2(u, grid, s, r_max) for s in s_values},
        surface=surf,
        radiation={d: radiation_functional(u, fields, lam, d, grid, r_max, phases) for d in deltas},
        extra={"estimate_lhs_i0": estimate_lhs_i0(u, fields, lam, grid, r_max, phases)} if grid.d >= 3 else {},
    )
