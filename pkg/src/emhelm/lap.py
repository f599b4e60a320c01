"""Experiment drivers: limiting absorption, lambda sweeps, estimate ratios,
the local elliptic estimate, the uniqueness probe and the lambda_1 search."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .fields import FieldSet
from .grid import Grid
from .multipliers import build_multiplier, lower_bound_combination
from .norms import (
    dual_N,
    estimate_lhs_i0,
    morrey_campanato,
    norm_report,
    radiation_functional,
    weighted_l2,
)
from .operator import AbsorbingLayerConfig, grad_A
from .problem import ResolventProblem
from .report import Record

__all__ = [
    "EpsilonSchedule",
    "SweepResult",
    "limiting_absorption_run",
    "lambda_sweep",
    "estimate_ratio_study",
    "elliptic_check",
    "uniqueness_probe",
    "find_lambda1",
    "local_h1",
]

ProblemFactory = Callable[..., ResolventProblem]


@dataclass(frozen=True)
class EpsilonSchedule:
    """eps_k = eps0 * rho^k for k = 0..K."""

    eps0: float = 0.5
    rho: float = 0.5
    K: int = 10

    def __post_init__(self):
        if not self.eps0 > 0:
            raise ValueError(f"eps0 must be positive, got {self.eps0}")
        if not (0 < self.rho < 1):
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")
        if self.K < 0:
            raise ValueError(f"K must be >= 0, got {self.K}")

    @property
    def values(self) -> list[float]:
        return [self.eps0 * self.rho**k for k in range(self.K + 1)]

    @classmethod
    def reaching(cls, eps0: float, rho: float, target: float) -> "EpsilonSchedule":
        """Shortest schedule whose last value is <= target."""
        K = max(0, math.ceil(math.log(target / eps0) / math.log(rho) - 1e-12))
        return cls(eps0, rho, K)


@dataclass
class SweepResult:
    """Rows keyed by run parameters plus the summary numbers of a sweep."""

    experiment: str
    records: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    trace: list = field(default_factory=list)
    solution: np.ndarray | None = None
    converged: bool | None = None

    def add(self, problem: ResolventProblem, diagnostic: str, value, delta=None, status: str = "ok",
            lam=None, eps=None):
        self.records.append(Record(
            experiment=self.experiment, family=problem.family, d=problem.grid.d, n=problem.grid.n,
            L=problem.grid.L, lam=problem.lam if lam is None else lam,
            eps=problem.eps if eps is None else eps, delta=delta,
            diagnostic=diagnostic, value=value, status=status))


def local_h1(v: np.ndarray, fields: FieldSet, lam: float, grid: Grid, radius: float,
             phases: np.ndarray | None = None) -> float:
    """(int_{|x|<=radius} lam |v|^2 + |grad_A v|^2)^(1/2)."""
    g = grad_A(v, fields, grid, phases)
    dens = lam * np.abs(v) ** 2 + np.sum(np.abs(g) ** 2, axis=0)
    return math.sqrt(grid.integrate(dens, grid.radius <= radius))


def _ratio(num: float, den: float) -> tuple[float | None, str]:
    if den == 0:
        return (None, "degenerate") if num == 0 else (math.inf, "unbounded")
    return num / den, "ok"


def _radiation_weight(f: np.ndarray, grid: Grid, delta: float) -> float:
    return grid.integrate(np.abs(f) ** 2 * (1 + grid.radius) ** (1 + delta))


def limiting_absorption_run(problem: ResolventProblem, schedule: EpsilonSchedule,
                            probe_radius: float | None = None, tol: float = 1e-8,
                            cauchy_tol: float = 1e-3, deltas: Iterable[float] = (0.5, 1.0, 1.5),
                            keep: bool = False) -> SweepResult:
    """Solve along the eps schedule with warm starts and track
    d_k = ||u_{eps_k} - u_{eps_{k+1}}||_{H^1_A(|x| <= rho*)}.

    Converged when d_k <= cauchy_tol times the local norm of the newest
    iterate.  Records per step: d_k, its ratio to d_{k-1}, the estimate
    ratio r1 and the radiation ratios r2(delta).
    """
    if problem.layer is None or not problem.layer.active:
        raise ValueError("the eps -> 0 run needs an active absorbing layer")
    grid = problem.grid
    rho = probe_radius if probe_radius is not None else grid.L / 4
    res = SweepResult("lap-run")
    deltas = tuple(deltas)
    n1 = dual_N(problem.f, grid, 1.0) ** 2
    wts = {dl: _radiation_weight(problem.f, grid, dl) for dl in deltas}
    prev = None
    d_prev = None
    sols = []
    res.converged = False
    for k, eps in enumerate(schedule.values):
        p = problem.with_params(eps=eps)
        u, stats = p.solve(tol=tol, x0=prev)
        phases = p.operator.phases
        res.add(p, "iterations", stats.iterations)
        res.add(p, "mc1", morrey_campanato(u, grid, 1.0, p.r_max))
        val, st = _ratio(estimate_lhs_i0(u, p.fields, p.lam, grid, p.r_max, phases), n1)
        res.add(p, "ratio_i0", val, status=st)
        for dl in deltas:
            val, st = _ratio(radiation_functional(u, p.fields, p.lam, dl, grid, p.r_max, phases), wts[dl])
            res.add(p, "ratio_radiation", val, delta=dl, status=st)
        if prev is not None:
            dk = local_h1(u - prev, p.fields, p.lam, grid, rho, phases)
            scale = local_h1(u, p.fields, p.lam, grid, rho, phases)
            res.trace.append(dk)
            res.add(p, "cauchy_d", dk)
            if d_prev is not None:
                val, st = _ratio(dk, d_prev)
                res.add(p, "cauchy_ratio", val, status=st)
            d_prev = dk
            if dk <= cauchy_tol * scale:
                res.converged = True
        if keep:
            sols.append(u)
        prev = u
    res.solution = prev
    res.summary = {"converged": res.converged, "final_eps": schedule.values[-1],
                   "mc1": morrey_campanato(prev, grid, 1.0, problem.r_max)}
    if keep:
        res.summary["solutions"] = sols
    last = problem.with_params(eps=schedule.values[-1])
    rep = norm_report(prev, problem.f, problem.fields, problem.lam, grid, deltas,
                      r_max=last.r_max, phases=last.operator.phases)
    for name, value in rep.rows():
        res.add(last, name, value)
    return res


def _run_all(jobs: list, fn, threads: int) -> list:
    if threads <= 1:
        return [fn(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, jobs))


def lambda_sweep(factory: ProblemFactory, lam_set: Iterable[float], s: float = 1.1,
                 tol: float = 1e-6, threads: int = 1) -> SweepResult:
    """Slope of log ||u||_{L^2_{-s}} against log lambda; ``factory(lam)``
    returns the problem at that frequency."""
    if not s > 1:
        raise ValueError(f"s must exceed 1, got {s}")
    lams = [float(x) for x in lam_set]
    res = SweepResult("sweep-lambda")

    def run(lam):
        p = factory(lam)
        u, stats = p.solve(tol=tol)
        return p, weighted_l2(u, p.grid, -s, p.r_max), stats

    out = _run_all(lams, run, threads)
    norms = []
    for p, v, stats in out:
        res.add(p, f"wL2(s=-{s:g})", v)
        res.add(p, "iterations", stats.iterations)
        norms.append(v)
    p0 = out[0][0]
    if any(v == 0 for v in norms) or len(lams) < 2:
        res.summary["slope"] = None
        res.add(p0, "slope", None, status="degenerate", lam=math.nan)
    else:
        slope = float(np.polyfit(np.log(lams), np.log(norms), 1)[0])
        res.summary["slope"] = slope
        res.add(p0, "slope", slope, lam=math.nan)
    res.summary["norms"] = norms
    return res


def estimate_ratio_study(factory: ProblemFactory, lam_set: Iterable[float], eps_set: Iterable[float],
                         delta_set: Iterable[float] = (0.5, 1.0, 1.5), tol: float = 1e-6,
                         threads: int = 1) -> SweepResult:
    """r1 = estimate_lhs_i0 / N_1(f)^2 and r2(delta) = radiation /
    int (1+|x|)^(1+delta) |f|^2 over a (lambda, eps) grid.

    ``factory(lam, eps)`` returns the problem; eps values are visited in
    decreasing order with warm starts.
    """
    eps_list = sorted((float(e) for e in eps_set), reverse=True)
    deltas = tuple(delta_set)
    res = SweepResult("estimate-ratios")

    def run(lam):
        rows = []
        prev = None
        for eps in eps_list:
            p = factory(lam, eps)
            u, stats = p.solve(tol=tol, x0=prev)
            prev = u
            ph = p.operator.phases
            total, parts = estimate_lhs_i0(u, p.fields, p.lam, p.grid, p.r_max, ph, parts=True)
            n1 = dual_N(p.f, p.grid, 1.0) ** 2
            r2 = {}
            for dl in deltas:
                r2[dl] = _ratio(radiation_functional(u, p.fields, p.lam, dl, p.grid, p.r_max, ph),
                                _radiation_weight(p.f, p.grid, dl))
            rows.append((p, _ratio(total, n1), parts, r2, stats))
        return rows

    r1_vals, r2_vals = [], {dl: [] for dl in deltas}
    for rows in _run_all([float(x) for x in lam_set], run, threads):
        for p, (r1, st), parts, r2, stats in rows:
            res.add(p, "ratio_i0", r1, status=st)
            res.add(p, "cubic_term", parts["cubic"])
            res.add(p, "iterations", stats.iterations)
            if r1 is not None:
                r1_vals.append(r1)
            for dl, (v, s2) in r2.items():
                res.add(p, "ratio_radiation", v, delta=dl, status=s2)
                if v is not None:
                    r2_vals[dl].append(v)
    if r1_vals:
        res.summary["r1_max"] = max(r1_vals)
        res.summary["r1_min"] = min(r1_vals)
        res.summary["r1_spread"] = max(r1_vals) / min(r1_vals) if min(r1_vals) > 0 else math.inf
    else:
        res.summary["r1_max"] = None
    res.summary["r2_max"] = {dl: (max(v) if v else None) for dl, v in r2_vals.items()}
    res.summary["r2_min"] = {dl: (min(v) if v else None) for dl, v in r2_vals.items()}
    return res


def elliptic_check(u: np.ndarray, f: np.ndarray, fields: FieldSet, lam: float, R: float,
                   grid: Grid, phases: np.ndarray | None = None) -> tuple[float, float, float]:
    """(lhs, rhs with C = 1, smallest C) for
    int_{|x|<=R} |grad_A u|^2 <= C (1 + lam) int_{|x|<=R+1} |u|^2 + int_{|x|<=R+1} |f|^2."""
    if R + 1 >= grid.L:
        raise ValueError(f"R + 1 = {R + 1} must stay below L = {grid.L}")
    u = np.asarray(u, dtype=complex).reshape(grid.shape)
    f = np.asarray(f, dtype=complex).reshape(grid.shape)
    r = grid.radius
    g = grad_A(u, fields, grid, phases)
    lhs = grid.integrate(np.sum(np.abs(g) ** 2, axis=0), r <= R)
    a = (1 + lam) * grid.integrate(np.abs(u) ** 2, r <= R + 1)
    b = grid.integrate(np.abs(f) ** 2, r <= R + 1)
    C = max(0.0, (lhs - b) / a) if a > 0 else 0.0
    return lhs, a + b, C


def uniqueness_probe(fields: FieldSet, lam: float, grid: Grid,
                     layer: AbsorbingLayerConfig | None = None, eps: float = 0.0,
                     tol: float = 1e-10) -> dict:
    """Solve the homogeneous problem with the outgoing closure; returns
    |||u|||_1 together with a note that a discrete zero cannot refute anything."""
    layer = layer or AbsorbingLayerConfig()
    p = ResolventProblem(grid, fields, lam, eps, np.zeros(grid.shape, dtype=complex), layer)
    u, stats = p.solve(tol=min(tol, 1e-2))
    return {"mc1": morrey_campanato(u, grid, 1.0, p.r_max), "iterations": stats.iterations,
            "note": "no discrete counterexample"}


def find_lambda1(factory: ProblemFactory, lam_set: Iterable[float], radii: Iterable[float] = (1.0, 2.0),
                 M: float | None = None, tol: float = 1e-8) -> SweepResult:
    """Smallest lambda in the sweep from which on the pv lower-bound
    combination is nonnegative for every listed R.  Use unstretched problems
    (eps > 0, no layer): the pv multipliers do not vanish near the walls."""
    res = SweepResult("lambda1")
    lams = sorted(float(x) for x in lam_set)
    ok = []
    for lam in lams:
        p = factory(lam)
        u, _ = p.solve(tol=tol)
        fe = p.operator @ u
        good = True
        for R in radii:
            params = {"R": R} if M is None else {"R": R, "M": M}
            m = build_multiplier("pv", params, p.grid)
            val = lower_bound_combination(u, m, p.fields, p.lam, p.eps, fe, p.grid,
                                          p.operator.phases, p.sampled)
            res.add(p, f"lower_bound(R={R:g})", val, status="pass" if val >= 0 else "fail")
            good &= val >= 0
        ok.append(good)
    lam1 = None
    for i in range(len(lams)):
        if all(ok[i:]):
            lam1 = lams[i]
            break
    res.summary["lambda1"] = lam1
    return res
