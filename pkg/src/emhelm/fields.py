"""Potential families, the magnetic field B, its trapping part, and the
admissibility checks on (A, V1, V2).

Evaluators take a tuple ``X`` of ``d`` broadcastable coordinate arrays and
return arrays (scalars) or lists of ``d`` arrays (vectors).  Jacobians are
returned as nested lists with ``J[k][j] = d A_k / d x_j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .grid import Grid

__all__ = [
    "smoothstep",
    "GaugeFunction",
    "MagneticPotential",
    "ScalarPotential",
    "ElectricPotential",
    "AssumptionConstants",
    "FieldSet",
    "MagneticField",
    "AssumptionReport",
    "SampledFields",
    "gauge_function",
    "magnetic_potential",
    "scalar_potential",
    "make_fields",
    "compute_B",
    "sample_fields",
    "validate_assumptions",
    "gauge_transform",
    "gauge_phase",
    "MAGNETIC_FAMILIES",
    "V1_FAMILIES",
    "V2_FAMILIES",
]

Coords = Sequence[np.ndarray]


# ---------------------------------------------------------------- cutoffs

def smoothstep(s, order: int = 0):
    """Monotone C^3 step: 0 for s <= 0, 1 for s >= 1, with derivatives.

    Returns the ``order``-th derivative (0..3) of
    ``t^4 (35 - 84 t + 70 t^2 - 20 t^3)`` on [0, 1].
    """
    t = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    inside = (np.asarray(s) > 0) & (np.asarray(s) < 1)
    if order == 0:
        return t**4 * (35 - 84 * t + 70 * t**2 - 20 * t**3)
    if order == 1:
        out = 140 * t**3 * (1 - t) ** 3
    elif order == 2:
        out = 420 * t**2 * (1 - t) ** 2 * (1 - 2 * t)
    elif order == 3:
        out = 840 * t * (1 - t) * (1 - 5 * t + 5 * t**2)
    else:
        raise ValueError("order must be 0..3")
    return np.where(inside, out, 0.0)


def _radius(X: Coords) -> np.ndarray:
    r2 = 0.0
    for x in X:
        r2 = r2 + x * x
    return np.sqrt(r2)


def _zeros(X: Coords) -> np.ndarray:
    return np.zeros(np.broadcast_shapes(*(np.shape(x) for x in X)))


# ---------------------------------------------------------------- magnetic

@dataclass(frozen=True)
class GaugeFunction:
    """Scalar gauge chi with its gradient (``grad`` may be None)."""

    name: str
    chi: Callable[[Coords], np.ndarray]
    grad: Callable[[Coords], list] | None = None
    params: dict = field(default_factory=dict)

    def gradient(self, X: Coords, h: float = 1e-5) -> list:
        if self.grad is not None:
            return [np.broadcast_to(g, _zeros(X).shape) for g in self.grad(X)]
        out = []
        for j in range(len(X)):
            Xp = list(X)
            Xm = list(X)
            Xp[j] = X[j] + h
            Xm[j] = X[j] - h
            out.append((self.chi(Xp) - self.chi(Xm)) / (2 * h))
        return out


def gauge_function(name: str, d: int = 3, **params) -> GaugeFunction:
    """Named gauges: ``zero``, ``x1``, ``x1x2``, ``linear`` (c=...), ``general``."""
    if name == "zero":
        return GaugeFunction(name, _zeros, lambda X: [_zeros(X)] * len(X))
    if name == "x1":
        return GaugeFunction(name, lambda X: X[0] + _zeros(X),
                             lambda X: [np.ones_like(_zeros(X))] + [_zeros(X)] * (len(X) - 1))
    if name == "x1x2":
        def grad(X):
            z = _zeros(X)
            return [X[1] + z, X[0] + z] + [z] * (len(X) - 2)
        return GaugeFunction(name, lambda X: X[0] * X[1] + _zeros(X), grad)
    if name == "linear":
        c = np.asarray(params.get("c", np.ones(d)), dtype=float)

        def chi(X):
            return sum(ci * x for ci, x in zip(c, X)) + _zeros(X)

        return GaugeFunction(name, chi, lambda X: [ci + _zeros(X) for ci in c], {"c": c.tolist()})
    if name == "general":
        a = float(params.get("a", 1.0))

        def chi(X):
            x3 = X[2] if len(X) > 2 else 0.0
            return a * (np.sin(X[0]) * np.cos(0.7 * X[1]) + 0.3 * x3 * x3 + 0.2 * X[0] * X[1]) + _zeros(X)

        def grad(X):
            z = _zeros(X)
            g = [a * (np.cos(X[0]) * np.cos(0.7 * X[1]) + 0.2 * X[1]) + z,
                 a * (-0.7 * np.sin(X[0]) * np.sin(0.7 * X[1]) + 0.2 * X[0]) + z]
            if len(X) > 2:
                g.append(a * 0.6 * X[2] + z)
            g += [z] * (len(X) - len(g))
            return g

        return GaugeFunction(name, chi, grad, {"a": a})
    raise ValueError(f"unknown gauge {name!r}")


@dataclass(frozen=True)
class MagneticPotential:
    """A = base(x) + sum of gauge gradients.

    Gauge parts are kept separately so link phases can use exact chi
    differences and B can ignore them (their curl vanishes identically).
    """

    family: str
    d: int
    base: Callable[[Coords], list] | None
    jacobian: Callable[[Coords], list] | None = None
    gauges: tuple[GaugeFunction, ...] = ()
    params: dict = field(default_factory=dict)

    def base_value(self, X: Coords) -> list:
        if self.base is None:
            z = _zeros(X)
            return [z] * self.d
        z = _zeros(X)
        return [a + z for a in self.base(X)]

    def __call__(self, X: Coords) -> list:
        A = self.base_value(X)
        for g in self.gauges:
            A = [a + b for a, b in zip(A, g.gradient(X))]
        return A

    @property
    def is_zero(self) -> bool:
        return self.base is None and not self.gauges

    def with_gauge(self, chi: GaugeFunction) -> "MagneticPotential":
        return replace(self, gauges=self.gauges + (chi,))

    def base_jacobian(self, X: Coords, h: float) -> list:
        """d x d nested list, J[k][j] = d_j A_k of the base part."""
        d = self.d
        if self.base is None:
            z = _zeros(X)
            return [[z] * d for _ in range(d)]
        if self.jacobian is not None:
            z = _zeros(X)
            return [[np.asarray(v) + z for v in row] for row in self.jacobian(X)]
        # central differences of the evaluator with the grid spacing
        J = [[None] * d for _ in range(d)]
        for j in range(d):
            Xp = list(X)
            Xm = list(X)
            Xp[j] = X[j] + h
            Xm[j] = X[j] - h
            Ap = self.base_value(Xp)
            Am = self.base_value(Xm)
            for k in range(d):
                J[k][j] = (Ap[k] - Am[k]) / (2 * h)
        return J


def _rot(X, d, scale):
    z = _zeros(X)
    return [-X[1] * scale + z, X[0] * scale + z] + [z] * (d - 2)


def magnetic_potential(family: str, d: int = 3, **params) -> MagneticPotential:
    """Built-in magnetic families.

    ``zero``; ``constant`` (A = b(-x2, x1, 0, ...), so B12 = -2b);
    ``gauge`` (A = grad chi for a named chi); ``singular`` (A = a(-x2, x1, 0,
    ...)/|x|^gamma, divergence free, B_tau = 0 exactly when gamma = 2).
    """
    if family == "zero":
        return MagneticPotential("zero", d, None)
    if family == "constant":
        b = float(params.get("b", 1.0))

        def jac(X):
            z = _zeros(X)
            J = [[z] * d for _ in range(d)]
            J[0] = list(J[0])
            J[1] = list(J[1])
            J[0][1] = z - b
            J[1][0] = z + b
            return J

        return MagneticPotential("constant", d, lambda X: _rot(X, d, b), jac, params={"b": b})
    if family == "gauge":
        name = params.get("chi", "x1x2")
        extra = {k: v for k, v in params.items() if k != "chi"}
        g = gauge_function(name, d, **extra)
        return MagneticPotential("gauge", d, None, gauges=(g,), params={"chi": name, **extra})
    if family == "singular":
        a = float(params.get("a", 0.5))
        gamma = float(params.get("gamma", 2.0))

        def A(X):
            return _rot(X, d, a * _radius(X) ** (-gamma))

        def jac(X):
            r = _radius(X)
            z = _zeros(X)
            rg = a * r ** (-gamma)
            w = gamma * a * r ** (-gamma - 2)
            J = [[z] * d for _ in range(d)]
            # A_1 = -a x2 r^-g, A_2 = a x1 r^-g
            J[0] = [w * X[1] * X[j] + z for j in range(d)]
            J[0][1] = J[0][1] - rg
            J[1] = [-w * X[0] * X[j] + z for j in range(d)]
            J[1][0] = J[1][0] + rg
            return J

        return MagneticPotential("singular", d, A, jac, params={"a": a, "gamma": gamma})
    raise ValueError(f"unknown magnetic family {family!r}")


MAGNETIC_FAMILIES = ("zero", "constant", "gauge", "singular")


# ---------------------------------------------------------------- electric

@dataclass(frozen=True)
class ScalarPotential:
    family: str
    func: Callable[[Coords], np.ndarray] | None
    radial_derivative: Callable[[Coords], np.ndarray] | None = None
    params: dict = field(default_factory=dict)

    def __call__(self, X: Coords) -> np.ndarray:
        if self.func is None:
            return _zeros(X)
        return self.func(X) + _zeros(X)

    def dr(self, X: Coords, h: float = 1e-5) -> np.ndarray:
        if self.func is None:
            return _zeros(X)
        if self.radial_derivative is not None:
            return self.radial_derivative(X) + _zeros(X)
        r = _radius(X)
        Xp = [x * (1 + h / r) for x in X]
        Xm = [x * (1 - h / r) for x in X]
        return (self.func(Xp) - self.func(Xm)) / (2 * h)


def scalar_potential(family: str, **params) -> ScalarPotential:
    """Built-in scalar families.

    ``zero``; ``long_range`` amp (1+r)^-mu theta(r/r0) with theta a smooth
    step from 0 at r0 to 1 at 2 r0; ``short_range`` amp (1+r)^(-1-mu);
    ``singular`` amp r^-(2-alpha) times a cutoff at ``radius`` (``sharp`` or
    ``smooth``, the latter vanishing beyond 2 radius).
    """
    if family == "zero":
        return ScalarPotential("zero", None)
    if family == "long_range":
        amp = float(params.get("amp", 1.0))
        mu = float(params.get("mu", 0.5))
        r0 = float(params.get("r0", 1.0))

        def f(X):
            r = _radius(X)
            return amp * (1 + r) ** (-mu) * smoothstep(r / r0 - 1)

        def dr(X):
            r = _radius(X)
            return amp * (-mu * (1 + r) ** (-mu - 1) * smoothstep(r / r0 - 1)
                          + (1 + r) ** (-mu) * smoothstep(r / r0 - 1, 1) / r0)

        return ScalarPotential(family, f, dr, {"amp": amp, "mu": mu, "r0": r0})
    if family == "short_range":
        amp = float(params.get("amp", 1.0))
        mu = float(params.get("mu", 0.5))

        def f(X):
            return amp * (1 + _radius(X)) ** (-1 - mu)

        def dr(X):
            return -amp * (1 + mu) * (1 + _radius(X)) ** (-2 - mu)

        return ScalarPotential(family, f, dr, {"amp": amp, "mu": mu})
    if family == "singular":
        amp = float(params.get("amp", 1.0))
        alpha = float(params.get("alpha", 0.5))
        radius = float(params.get("radius", 1.0))
        cutoff = params.get("cutoff", "sharp")
        if cutoff not in ("sharp", "smooth"):
            raise ValueError(f"cutoff must be 'sharp' or 'smooth', got {cutoff!r}")

        def cut(r, order=0):
            if cutoff == "sharp":
                return (r <= radius).astype(float) if order == 0 else np.zeros_like(r)
            s = r / radius - 1
            return 1 - smoothstep(s) if order == 0 else -smoothstep(s, 1) / radius

        def f(X):
            r = _radius(X)
            return amp * r ** (alpha - 2) * cut(r)

        def dr(X):
            r = _radius(X)
            return amp * ((alpha - 2) * r ** (alpha - 3) * cut(r) + r ** (alpha - 2) * cut(r, 1))

        return ScalarPotential(family, f, dr,
                               {"amp": amp, "alpha": alpha, "radius": radius, "cutoff": cutoff})
    raise ValueError(f"unknown potential family {family!r}")


V1_FAMILIES = ("zero", "long_range")
V2_FAMILIES = ("zero", "short_range", "singular")


@dataclass(frozen=True)
class ElectricPotential:
    V1: ScalarPotential = field(default_factory=lambda: scalar_potential("zero"))
    V2: ScalarPotential = field(default_factory=lambda: scalar_potential("zero"))


@dataclass(frozen=True)
class AssumptionConstants:
    """Thresholds for the admissibility checks.

    ``cstar`` bounds |x|^2 |B| near the origin in d > 3 and ``c_div`` bounds
    |x|^2 |div A|; when None the quotient is reported but not judged.
    """

    r0: float = 1.0
    mu: float = 0.5
    c: float = 1.0
    alpha: float = 0.5
    cstar: float | None = None
    c_div: float | None = None


@dataclass(frozen=True)
class FieldSet:
    A: MagneticPotential
    V: ElectricPotential = field(default_factory=ElectricPotential)
    constants: AssumptionConstants = field(default_factory=AssumptionConstants)

    @property
    def d(self) -> int:
        return self.A.d

    @property
    def family(self) -> str:
        parts = [self.A.family]
        if self.V.V1.family != "zero":
            parts.append("V1:" + self.V.V1.family)
        if self.V.V2.family != "zero":
            parts.append("V2:" + self.V.V2.family)
        return "+".join(parts)


def make_fields(d: int = 3, A: str | dict = "zero", V1: str | dict = "zero",
                V2: str | dict = "zero", constants: AssumptionConstants | None = None) -> FieldSet:
    """Build a FieldSet from family names or ``{"family": name, **params}`` dicts."""

    def split(spec):
        if isinstance(spec, str):
            return spec, {}
        spec = dict(spec)
        return spec.pop("family"), spec

    a_name, a_par = split(A)
    v1_name, v1_par = split(V1)
    v2_name, v2_par = split(V2)
    return FieldSet(
        magnetic_potential(a_name, d, **a_par),
        ElectricPotential(scalar_potential(v1_name, **v1_par), scalar_potential(v2_name, **v2_par)),
        constants or AssumptionConstants(),
    )


# ---------------------------------------------------------------- derived

@dataclass(frozen=True)
class MagneticField:
    """``B[k, j]`` and ``B_tau[j]`` sampled on the grid (leading axes)."""

    B: np.ndarray
    B_tau: np.ndarray

    @property
    def magnitude(self) -> np.ndarray:
        d = self.B.shape[0]
        s = np.zeros(self.B.shape[2:])
        for k in range(d):
            for j in range(k + 1, d):
                s = s + self.B[k, j] ** 2
        return np.sqrt(s)

    @property
    def tau_magnitude(self) -> np.ndarray:
        return np.sqrt(np.sum(self.B_tau**2, axis=0))

    @property
    def is_zero(self) -> bool:
        return not np.any(self.B)


def compute_B(A: MagneticPotential, grid: Grid) -> MagneticField:
    X = grid.coords
    d = grid.d
    J = A.base_jacobian(X, grid.h)
    B = np.zeros((d, d) + grid.shape)
    for k in range(d):
        for j in range(k + 1, d):
            b = np.broadcast_to(J[k][j] - J[j][k], grid.shape)
            B[k, j] = b
            B[j, k] = -b
    r = grid.radius
    # unit radial vector; a node at the origin (unstaggered grid) gets B_tau = 0
    inv = np.divide(1.0, r, out=np.zeros_like(r), where=r > 0)
    B_tau = np.zeros((d,) + grid.shape)
    for j in range(d):
        for k in range(d):
            if k != j:
                B_tau[j] += X[k] * inv * B[k, j]
    return MagneticField(B, B_tau)


@dataclass(frozen=True)
class SampledFields:
    """Node samples reused by norms, multipliers and validation."""

    V1: np.ndarray
    V2: np.ndarray
    dV1: np.ndarray
    magnetic: MagneticField
    div_A: np.ndarray


def sample_fields(fields: FieldSet, grid: Grid) -> SampledFields:
    X = grid.coords
    V1 = np.broadcast_to(fields.V.V1(X), grid.shape).copy()
    V2 = np.broadcast_to(fields.V.V2(X), grid.shape).copy()
    dV1 = np.broadcast_to(fields.V.V1.dr(X, grid.h), grid.shape).copy()
    J = fields.A.base_jacobian(X, grid.h)
    div = np.zeros(grid.shape)
    for k in range(grid.d):
        div = div + J[k][k]
    for g in fields.A.gauges:
        # Laplacian of chi by second differences of chi
        h = grid.h
        c0 = g.chi(X)
        for j in range(grid.d):
            Xp = list(X)
            Xm = list(X)
            Xp[j] = X[j] + h
            Xm[j] = X[j] - h
            div = div + (g.chi(Xp) - 2 * c0 + g.chi(Xm)) / h**2
    for name, v in (("V1", V1), ("V2", V2)):
        if not np.all(np.isfinite(v)):
            raise ValueError(f"{name} is not finite at every node")
    return SampledFields(V1, V2, dV1, compute_B(fields.A, grid), div)


# ---------------------------------------------------------------- validation

@dataclass(frozen=True)
class AssumptionReport:
    q_far: float
    q_V2near: float
    q_Bnear: float
    q_divA: float
    q_p0: float
    q_extra: float
    passes: dict
    detail: dict

    @property
    def ok(self) -> bool:
        return all(v is not False for v in self.passes.values())

    @property
    def failed(self) -> list[str]:
        return [k for k, v in self.passes.items() if v is False]


def _sup(values: np.ndarray, mask: np.ndarray) -> float:
    return float(values[mask].max()) if np.any(mask) else 0.0


def _extra_constant(fields: FieldSet, grid: Grid, R: float) -> float:
    """Empirical C_R in int_{|x|<=R} |A u|^2 <= C_R int |grad u|^2 over a
    fixed set of Gaussian probes."""
    if fields.A.is_zero:
        return 0.0
    X = grid.coords
    A = fields.A(X)
    r = grid.radius
    inside = r <= R
    worst = 0.0
    for width in (0.5, 1.0, 2.0):
        for shift in (0.0, 0.5 * R):
            c = [X[0] - shift] + list(X[1:])
            rr = _radius(c)
            u = np.exp(-(rr**2) / (2 * width**2))
            g2 = (rr / width**2) ** 2 * u**2
            num = sum(np.sum((a**2 * u**2)[inside]) for a in A)
            den = np.sum(g2)
            if den > 0:
                worst = max(worst, float(num / den))
    return worst


def validate_assumptions(fields: FieldSet, grid: Grid,
                         constants: AssumptionConstants | None = None,
                         sampled: SampledFields | None = None) -> AssumptionReport:
    k = constants or fields.constants
    s = sampled or sample_fields(fields, grid)
    r = grid.radius
    d = grid.d
    far = r >= k.r0
    near = r <= k.r0
    neg = np.maximum(-s.dV1, 0.0)
    far_terms = {
        "V1": r ** (1 + k.mu) * np.abs(s.V1) / r,
        "dV1": r ** (1 + k.mu) * neg,
        "B_tau": r ** (1 + k.mu) * s.magnetic.tau_magnitude,
        "V2": r ** (1 + k.mu) * np.abs(s.V2),
    }
    q_far = _sup(sum(far_terms.values()), far)
    q_v2 = _sup(r ** (2 - k.alpha) * np.abs(s.V2), near)
    bexp = 2.0 if d > 3 else 2 - k.alpha
    q_b = _sup(r**bexp * s.magnetic.magnitude, near)
    q_div = float(np.max(r**2 * np.abs(s.div_A)))
    q_p0 = _sup(np.abs(s.V1) + neg, r <= k.r0)
    q_extra = _extra_constant(fields, grid, 0.5 * grid.L)
    rtol = 1e-12
    passes = {
        "far_decay": q_far <= k.c * (1 + rtol),
        "V2_near_origin": q_v2 <= k.c * (1 + rtol),
        "B_near_origin": (q_b <= k.c * (1 + rtol)) if d == 3 else
        (None if k.cstar is None else q_b <= k.cstar * (1 + rtol)),
        "div_A": None if k.c_div is None else q_div <= k.c_div * (1 + rtol),
        "V1_vanishes_near_origin": q_p0 == 0.0,
        "A_form_bound": bool(np.isfinite(q_extra)),
    }
    detail = {f"far_{name}": _sup(v, far) for name, v in far_terms.items()}
    return AssumptionReport(q_far, q_v2, q_b, q_div, q_p0, q_extra, passes, detail)


# ---------------------------------------------------------------- gauge

def gauge_transform(fields: FieldSet, chi: GaugeFunction) -> FieldSet:
    """A -> A + grad chi; potentials untouched."""
    return replace(fields, A=fields.A.with_gauge(chi))


def gauge_phase(chi: GaugeFunction, grid: Grid) -> np.ndarray:
    """exp(-i chi) on the nodes: maps a solution for A to one for A + grad chi."""
    return np.exp(-1j * np.broadcast_to(chi.chi(grid.coords), grid.shape))
