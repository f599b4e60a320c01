import math

import numpy as np
import pytest

from emhelm.fields import make_fields
from emhelm.grid import build_grid
from emhelm.lap import (
    EpsilonSchedule,
    elliptic_check,
    estimate_ratio_study,
    find_lambda1,
    lambda_sweep,
    limiting_absorption_run,
    uniqueness_probe,
)
from emhelm.operator import AbsorbingLayerConfig
from emhelm.oracle import free_resolvent_convolution
from emhelm.problem import ResolventProblem, make_source
from emhelm.report import write_csv, read_csv

LAYER = AbsorbingLayerConfig()
SING_A = {"family": "singular", "a": 0.5, "gamma": 1.5}


def test_schedule():
    s = EpsilonSchedule()
    v = s.values
    assert len(v) == 11 and v[0] == 0.5 and all(a > b > 0 for a, b in zip(v, v[1:]))
    r = EpsilonSchedule.reaching(0.3, 0.3, 2.0**-8)
    assert r.values[-1] <= 2.0**-8 < r.values[-2]
    assert EpsilonSchedule.reaching(0.5, 0.5, 2.0**-8).values[-1] == 2.0**-8
    for bad in ((0.0, 0.5, 3), (0.5, 1.0, 3), (0.5, 0.5, -1)):
        with pytest.raises(ValueError):
            EpsilonSchedule(*bad)


def test_lap_zero_data():
    g = build_grid(3, 4.0, 16)
    p = ResolventProblem(g, make_fields(3), 1.0, 0.5, np.zeros(g.shape, complex), LAYER)
    res = limiting_absorption_run(p, EpsilonSchedule(0.5, 0.5, 3))
    assert res.converged and not np.any(res.solution)
    assert all(r.value == 0 for r in res.records if r.diagnostic == "iterations")


def test_lap_needs_layer():
    g = build_grid(3, 4.0, 16)
    p = ResolventProblem(g, make_fields(3), 1.0, 0.5, make_source("gaussian", g))
    with pytest.raises(ValueError):
        limiting_absorption_run(p, EpsilonSchedule())


def test_lap_free_matches_oracle():
    g = build_grid(3, 8.0, 32)
    f = make_source("gaussian", g)
    p = ResolventProblem(g, make_fields(3), 1.0, 1.0, f, LAYER)
    res = limiting_absorption_run(p, EpsilonSchedule(1.0, 0.5, 8), tol=1e-8)
    assert all(b < a for a, b in zip(res.trace, res.trace[1:]))
    o = free_resolvent_convolution(f, 1.0, 2.0**-8, g).u
    box = np.max(np.abs(np.stack(g.full_coords())), axis=0) <= LAYER.physical_halfwidth(g.L)
    err = np.linalg.norm((res.solution - o)[box]) / np.linalg.norm(o[box])
    assert err <= 0.05


def test_lap_singular_radiation_bounded_in_delta():
    g = build_grid(3, 4.0, 24)
    f = make_source("sheet", g, width=1.0, thickness=0.1)
    p = ResolventProblem(g, make_fields(3, A=SING_A), 4.0, 0.5, f, LAYER)
    res = limiting_absorption_run(p, EpsilonSchedule(0.5, 0.5, 8), tol=1e-8, cauchy_tol=1e-2)
    assert res.converged
    for dl in (0.5, 1.0, 1.5):
        vals = [r.value for r in res.records if r.diagnostic == "ratio_radiation" and r.delta == dl]
        assert all(np.isfinite(vals)) and max(vals) / min(vals) < 10


def test_records_carry_parameters(tmp_path):
    g = build_grid(3, 4.0, 16)
    p = ResolventProblem(g, make_fields(3), 1.0, 0.5, make_source("gaussian", g), LAYER)
    res = limiting_absorption_run(p, EpsilonSchedule(0.5, 0.5, 2))
    rows = read_csv(write_csv(res.records, tmp_path / "x.csv"))
    assert all(r["lambda"] != "na" and r["epsilon"] != "na" and r["family"] and r["n"] == "16" for r in rows)


def test_lambda_sweep_degenerate():
    g = build_grid(3, 4.0, 16)
    z = np.zeros(g.shape, complex)
    res = lambda_sweep(lambda lam: ResolventProblem(g, make_fields(3), lam, 0.0, z, LAYER), [1, 4])
    assert res.summary["slope"] is None
    row = [r for r in res.records if r.diagnostic == "slope"][0]
    assert row.as_row()[-2:] == ["na", "degenerate"]
    with pytest.raises(ValueError):
        lambda_sweep(lambda lam: None, [1, 4], s=1.0)


def test_lambda_sweep_threads_agree():
    g = build_grid(3, 4.0, 16)
    f = make_source("gaussian", g)

    def fac(lam):
        return ResolventProblem(g, make_fields(3), lam, 0.1, f, LAYER)

    a = lambda_sweep(fac, [1, 4, 16], tol=1e-10)
    b = lambda_sweep(fac, [1, 4, 16], tol=1e-10, threads=3)
    assert [r.as_row() for r in a.records if r.diagnostic != "iterations"] == \
        [r.as_row() for r in b.records if r.diagnostic != "iterations"]


def test_ratio_study_degenerate_and_free():
    g = build_grid(3, 4.0, 16)
    z = np.zeros(g.shape, complex)
    res = estimate_ratio_study(lambda lam, eps: ResolventProblem(g, make_fields(3), lam, eps, z, LAYER),
                               [1.0], [0.5])
    assert res.summary["r1_max"] is None
    assert {r.status for r in res.records if r.diagnostic.startswith("ratio")} == {"degenerate"}
    f = make_source("sheet", g, width=1.0, thickness=0.1)
    res = estimate_ratio_study(lambda lam, eps: ResolventProblem(g, make_fields(3), lam, eps, f, LAYER),
                               [1.0, 4.0, 16.0], [0.5, 0.125, 2.0**-5])
    assert res.summary["r1_spread"] <= 10
    assert all(r.value == 0.0 for r in res.records if r.diagnostic == "cubic_term")


def test_cubic_term_only_in_four_dimensions():
    g = build_grid(4, 3.0, 10)
    f = make_source("gaussian", g)
    res = estimate_ratio_study(lambda lam, eps: ResolventProblem(g, make_fields(4), lam, eps, f), [1.0], [0.5])
    assert all(r.value > 0 for r in res.records if r.diagnostic == "cubic_term")


def test_elliptic_check():
    g = build_grid(3, 8.0, 32)
    z = np.zeros(g.shape)
    assert elliptic_check(z, z, make_fields(3), 1.0, 2.0, g)[2] == 0
    with pytest.raises(ValueError):
        elliptic_check(z, z, make_fields(3), 1.0, 7.5, g)
    Cs = []
    for n in (32, 64):
        g = build_grid(3, 8.0, n)
        f = make_source("gaussian", g)
        u = free_resolvent_convolution(f, 1.0, 0.5, g).u
        Cs.append(elliptic_check(u, f, make_fields(3), 1.0, 2.0, g)[2])
    assert np.isfinite(Cs[0]) and abs(Cs[1] - Cs[0]) <= 0.2 * Cs[1]


def test_elliptic_constant_non_increasing_in_lambda():
    g = build_grid(3, 8.0, 32)
    f = make_source("gaussian", g)
    Cs = []
    for lam in (1.0, 4.0, 16.0):
        u = free_resolvent_convolution(f, lam, 0.5, g).u
        Cs.append(elliptic_check(u, f, make_fields(3), lam, 2.0, g)[2])
    assert Cs[0] >= Cs[1] >= Cs[2]


@pytest.mark.parametrize("A,lam,bound", [("zero", 1.0, 1e-10), (SING_A, 4.0, 1e-8), ("constant", 1.0, 1e-8)])
def test_uniqueness_probe(A, lam, bound):
    g = build_grid(3, 4.0, 16)
    out = uniqueness_probe(make_fields(3, A=A), lam, g)
    assert out["mc1"] <= bound and out["note"] == "no discrete counterexample"


def test_find_lambda1():
    g = build_grid(3, 6.0, 24)
    f = make_source("gaussian", g, sigma=0.5)
    fields = make_fields(3, A=SING_A)
    res = find_lambda1(lambda lam: ResolventProblem(g, fields, lam, 0.5, f), [1.0, 4.0, 16.0])
    lam1 = res.summary["lambda1"]
    assert lam1 is None or lam1 in (1.0, 4.0, 16.0)
    statuses = [r.status for r in res.records]
    assert set(statuses) <= {"pass", "fail"} and len(statuses) == 6
    assert math.isfinite(sum(r.value for r in res.records))
