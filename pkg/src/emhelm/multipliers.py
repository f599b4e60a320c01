"""Radial multipliers and discrete residuals of the multiplier identities.

For a solution of (Delta_A + V1 + V2 + lambda + i eps) u = f and radial
multipliers phi, psi the three identities read

symmetric::

    int phi lam |u|^2 - int phi |grad_A u|^2 + int phi (V1 + V2) |u|^2
        - Re int grad phi . grad_A u conj(u)  =  Re int phi f conj(u)

imaginary::

    eps int phi |u|^2 - Im int grad phi . grad_A u conj(u)  =  Im int phi f conj(u)

Morawetz::

    int psi''|grad_A^r u|^2 + (psi'/r)|grad_A^perp u|^2
        + 1/2 Re int grad(Delta psi) . grad_A u conj(u)
        + eps Im int grad psi . conj(grad_A u) u
        + Im int psi' B_tau . grad_A u conj(u)
        - 1/2 int Delta psi V2 |u|^2 - Re int V2 grad psi . grad_A u conj(u)
        + 1/2 int psi' d_r V1 |u|^2
      = -Re int f grad psi . conj(grad_A u) - 1/2 Re int f Delta psi conj(u)

The sign of the B_tau term belongs to the convention B_kj = d_j A_k - d_k A_j
and (B_tau)_j = sum_k (x_k/|x|) B_kj used in :mod:`emhelm.fields`.

Each report lists the left-hand terms and the negated right-hand terms, so
the signed terms add up to the residual.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import FieldSet, SampledFields, sample_fields, smoothstep
from .grid import Grid, sphere_shell
from .operator import forward_differences, grad_A, link_phases, split_gradient

__all__ = [
    "RadialMultiplier",
    "IdentityResidualReport",
    "build_multiplier",
    "identity_residual_symmetric",
    "identity_residual_imag",
    "identity_residual_morawetz",
    "lower_bound_combination",
    "FAMILIES",
]

FAMILIES = ("pv", "sommerfeld", "uniqueness", "bump", "quadratic", "constant")


@dataclass(frozen=True, eq=False)
class RadialMultiplier:
    """Node samples of psi and phi with their radial derivatives.

    ``grad_lap_psi`` and ``dphi`` are radial components of the gradients of
    Delta psi and phi away from kinks.  A kink at radius R contributes
    ``coef * delta(|x| - R) x/|x|`` to one of those gradients; these are
    listed in ``surfaces`` as ``(R, coef_dphi, coef_grad_lap)``.
    """

    family: str
    params: dict
    psi: np.ndarray
    dpsi: np.ndarray
    d2psi: np.ndarray
    lap_psi: np.ndarray
    grad_lap_psi: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    surfaces: tuple = ()


def _profiles(family: str, p: dict, r: np.ndarray, d: int):
    """(psi', psi'', psi''', phi, phi') at radii r, plus kink list."""
    z = np.zeros_like(r)
    if family == "pv":
        R, M = p["R"], p["M"]
        inside = r <= R
        d1 = np.where(inside, r / (2 * R) + M, M + 0.5)
        d2 = np.where(inside, 1 / (2 * R), 0.0)
        phi = np.where(inside, 1 / (4 * R), 0.0)
        # jumps of phi and of Delta psi across |x| = R (outside minus inside)
        return d1, d2, z, phi, z, ((R, -1 / (4 * R), -1 / (2 * R)),)
    if family == "sommerfeld":
        delta, r0 = p["delta"], p["r0"]
        P = (1 + r) ** delta
        P1 = delta * (1 + r) ** (delta - 1)
        P2 = delta * (delta - 1) * (1 + r) ** (delta - 2)
        s = r / r0 - 1
        t0, t1, t2 = smoothstep(s), smoothstep(s, 1) / r0, smoothstep(s, 2) / r0**2
        d1 = P * t0
        d2 = P1 * t0 + P * t1
        d3 = P2 * t0 + 2 * P1 * t1 + P * t2
        return d1, d2, d3, d1, d2, ()
    if family == "uniqueness":
        R = p["R"]
        s = r / R
        t0 = smoothstep(2 * s - 1)
        t1 = 2 * smoothstep(2 * s - 1, 1)
        t2 = 4 * smoothstep(2 * s - 1, 2)
        d1 = s * t0
        d2 = (t0 + s * t1) / R
        d3 = (2 * t1 + s * t2) / R**2
        return d1, d2, d3, t0 / (2 * R), t1 / (2 * R**2), ()
    if family == "bump":
        R = p["R"]
        q = np.minimum((r / R) ** 2, 1.0)
        w = (1 - q) ** 4
        w1 = -8 * r * (1 - q) ** 3 / R**2
        w2 = -8 * (1 - q) ** 3 / R**2 + 48 * r**2 * (1 - q) ** 2 / R**4
        return r * w, w + r * w1, 2 * w1 + r * w2, w, w1, ()
    if family == "quadratic":
        return r, np.ones_like(r), z, np.ones_like(r), z, ()
    if family == "constant":
        return z, z, z, np.ones_like(r), z, ()
    raise ValueError(f"unknown multiplier family {family!r}")


def _check_params(family: str, params: dict, d: int) -> dict:
    p = dict(params)
    if family == "pv":
        p.setdefault("R", 1.0)
        p.setdefault("M", 0.5 if d == 3 else 1.0)
        if p["M"] <= 0 or p["R"] <= 0:
            raise ValueError("pv multiplier needs R > 0 and M > 0")
    elif family == "sommerfeld":
        p.setdefault("delta", 1.0)
        p.setdefault("r0", 1.0)
        if not (0 < p["delta"] < 2):
            raise ValueError(f"delta must lie in (0, 2), got {p['delta']}")
        if p["r0"] <= 0:
            raise ValueError("r0 must be positive")
    elif family == "uniqueness":
        p.setdefault("R", 4.0)
        p.setdefault("r0", 1.0)
        if p["R"] <= 2 * p["r0"]:
            raise ValueError(f"uniqueness multiplier needs R > 2 r0, got R={p['R']}, r0={p['r0']}")
    elif family == "bump":
        p.setdefault("R", 2.0)
        if p["R"] <= 0:
            raise ValueError("bump radius must be positive")
    return {k: float(v) for k, v in p.items()}


def build_multiplier(family: str, params: dict | None, grid: Grid) -> RadialMultiplier:
    """Sample a multiplier family on the grid.

    Families: ``pv`` (R, M), ``sommerfeld`` (delta, r0), ``uniqueness``
    (R, r0), ``bump`` (R; psi' = r (1 - r^2/R^2)^4, phi = (1 - r^2/R^2)^4),
    ``quadratic`` (psi = |x|^2/2, phi = 1) and ``constant`` (phi = 1, psi = 0).
    """
    d = grid.d
    p = _check_params(family, params or {}, d)
    r = grid.radius
    d1, d2, d3, phi, dphi, kinks = _profiles(family, p, r, d)
    lap = d2 + (d - 1) * d1 / r
    grad_lap = d3 + (d - 1) * (d2 / r - d1 / r**2)
    # psi itself from a fine radial quadrature of psi'
    rr = np.linspace(0.0, float(r.max()) * 1.001, 8193)
    prof = _profiles(family, p, np.maximum(rr, 1e-300), d)[0]
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (prof[1:] + prof[:-1]) * np.diff(rr))])
    psi = np.interp(r, rr, cum)
    return RadialMultiplier(family, p, psi, d1, d2, lap, grad_lap, phi, dphi, tuple(kinks))


@dataclass
class IdentityResidualReport:
    identity: str
    terms: dict = field(default_factory=dict)

    @property
    def residual(self) -> float:
        return float(sum(self.terms.values()))

    @property
    def scale(self) -> float:
        return max((abs(v) for v in self.terms.values()), default=0.0)

    @property
    def normalized(self) -> float:
        s = self.scale
        return abs(self.residual) / s if s > 0 else 0.0

    def rows(self) -> list[tuple[str, str, float]]:
        out = [(self.identity, name, v) for name, v in self.terms.items()]
        out += [(self.identity, "residual", self.residual), (self.identity, "normalized", self.normalized)]
        return out


def _prep(u, fields, grid, phases):
    u = np.asarray(u, dtype=complex).reshape(grid.shape)
    if phases is None:
        phases = link_phases(grid, fields)
    return u, phases


def _radial_pairing(u, g, m: RadialMultiplier, grid: Grid, which: str) -> complex:
    """int (coef(r) x/|x|) . grad_A u conj(u), including kink surface terms."""
    radial, _ = split_gradient(g, grid)
    dens = radial * np.conj(u)
    coef = m.dphi if which == "phi" else m.grad_lap_psi
    total = complex(np.sum(coef * dens) * grid.cell_volume)
    for R, c_phi, c_lap in m.surfaces:
        c = c_phi if which == "phi" else c_lap
        if c != 0:
            sh = sphere_shell(grid, R)
            total += c * complex(np.sum(dens[sh.nodes]) * sh.weight)
    return total


def _link_weighted_energy(u, fields, grid, phases, weight: np.ndarray) -> float:
    """sum over links of w(link) |D_A u|^2 h^d with w averaged to link midpoints."""
    D = forward_differences(u, fields, grid, phases)
    total = 0.0
    for j in range(grid.d):
        w_next = np.concatenate([np.take(weight, range(1, grid.n), axis=j),
                                 np.take(weight, [grid.n - 1], axis=j)], axis=j)
        total += float(np.sum(0.5 * (weight + w_next) * np.abs(D[j]) ** 2))
        face = np.take(u, 0, axis=j)
        total += float(np.sum(np.take(weight, 0, axis=j) * np.abs(face) ** 2)) / grid.h**2
    return total * grid.cell_volume


def identity_residual_symmetric(u, m: RadialMultiplier, fields: FieldSet, lam: float, eps: float,
                                f, grid: Grid, phases: np.ndarray | None = None,
                                sampled: SampledFields | None = None) -> IdentityResidualReport:
    """Residual of the real-part identity; ``eps`` is accepted for symmetry of
    the call signatures and does not enter."""
    u, phases = _prep(u, fields, grid, phases)
    f = np.asarray(f, dtype=complex).reshape(grid.shape)
    s = sampled or sample_fields(fields, grid)
    hv = grid.cell_volume
    u2 = np.abs(u) ** 2
    g = grad_A(u, fields, grid, phases)
    rep = IdentityResidualReport("symmetric")
    rep.terms["lambda"] = lam * float(np.sum(m.phi * u2)) * hv
    rep.terms["gradient"] = -_link_weighted_energy(u, fields, grid, phases, m.phi)
    rep.terms["potential"] = float(np.sum(m.phi * (s.V1 + s.V2) * u2)) * hv
    rep.terms["grad_phi"] = -_radial_pairing(u, g, m, grid, "phi").real
    rep.terms["rhs_f"] = -float(np.real(np.sum(m.phi * f * np.conj(u)))) * hv
    return rep


def identity_residual_imag(u, m: RadialMultiplier, eps: float, f, grid: Grid,
                           fields: FieldSet | None = None,
                           phases: np.ndarray | None = None) -> IdentityResidualReport:
    from .fields import make_fields

    fields = fields or make_fields(grid.d)
    u, phases = _prep(u, fields, grid, phases)
    f = np.asarray(f, dtype=complex).reshape(grid.shape)
    hv = grid.cell_volume
    rep = IdentityResidualReport("imaginary")
    rep.terms["eps"] = eps * float(np.sum(m.phi * np.abs(u) ** 2)) * hv
    if np.any(m.dphi) or m.surfaces:
        g = grad_A(u, fields, grid, phases)
        rep.terms["grad_phi"] = -_radial_pairing(u, g, m, grid, "phi").imag
    else:
        rep.terms["grad_phi"] = 0.0
    rep.terms["rhs_f"] = -float(np.imag(np.sum(m.phi * f * np.conj(u)))) * hv
    return rep


def identity_residual_morawetz(u, m: RadialMultiplier, fields: FieldSet, lam: float, eps: float,
                               f, grid: Grid, phases: np.ndarray | None = None,
                               sampled: SampledFields | None = None) -> IdentityResidualReport:
    """Residual of the Morawetz identity; ``lam`` drops out of it."""
    u, phases = _prep(u, fields, grid, phases)
    f = np.asarray(f, dtype=complex).reshape(grid.shape)
    s = sampled or sample_fields(fields, grid)
    hv = grid.cell_volume
    r = grid.radius
    xhat = [c / r for c in grid.coords]
    g = grad_A(u, fields, grid, phases)
    radial, tan2 = split_gradient(g, grid)
    ub = np.conj(u)
    u2 = np.abs(u) ** 2
    rep = IdentityResidualReport("morawetz")
    rep.terms["hessian"] = float(np.sum(m.d2psi * np.abs(radial) ** 2 + m.dpsi / r * tan2)) * hv
    rep.terms["grad_lap_psi"] = 0.5 * _radial_pairing(u, g, m, grid, "lap").real
    # grad psi . conj(grad_A u) u = psi' conj(radial) u
    rep.terms["eps"] = eps * float(np.imag(np.sum(m.dpsi * np.conj(radial) * u))) * hv
    if s.magnetic.is_zero:
        rep.terms["B_tau"] = 0.0
    else:
        Bt = s.magnetic.B_tau
        dot = sum(Bt[j] * (g[j] - xhat[j] * radial) for j in range(grid.d))
        rep.terms["B_tau"] = float(np.imag(np.sum(m.dpsi * dot * ub))) * hv
    rep.terms["V2_lap"] = -0.5 * float(np.sum(m.lap_psi * s.V2 * u2)) * hv
    rep.terms["V2_grad"] = -float(np.real(np.sum(s.V2 * m.dpsi * radial * ub))) * hv
    rep.terms["dV1"] = 0.5 * float(np.sum(m.dpsi * s.dV1 * u2)) * hv
    rep.terms["rhs_f_grad"] = float(np.real(np.sum(f * m.dpsi * np.conj(radial)))) * hv
    rep.terms["rhs_f_lap"] = 0.5 * float(np.real(np.sum(f * m.lap_psi * ub))) * hv
    return rep


def lower_bound_combination(u, m: RadialMultiplier, fields: FieldSet, lam: float, eps: float, f,
                            grid: Grid, phases: np.ndarray | None = None,
                            sampled: SampledFields | None = None) -> float:
    """Left side of the sum of the symmetric and Morawetz identities with the
    eps term moved to the right; the large-frequency estimate rests on its
    positivity for the pv multipliers."""
    sym = identity_residual_symmetric(u, m, fields, lam, eps, f, grid, phases, sampled)
    mor = identity_residual_morawetz(u, m, fields, lam, eps, f, grid, phases, sampled)
    keep_sym = sum(v for k, v in sym.terms.items() if not k.startswith("rhs"))
    keep_mor = sum(v for k, v in mor.terms.items() if not k.startswith("rhs") and k != "eps")
    return float(keep_sym + keep_mor)
