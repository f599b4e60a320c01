import math

import numpy as np
import pytest

from emhelm.grid import build_grid
from emhelm.problem import ResolventProblem, make_source
from emhelm.fields import make_fields
from emhelm.operator import AbsorbingLayerConfig
from emhelm.report import COLUMNS, Record, fmt, plot_series, read_csv, write_csv


def test_fmt():
    assert fmt(None) == "na" and fmt(math.nan) == "na"
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt(3) == "3" and fmt(True) == "1" and fmt(math.inf) == "inf"


def test_record_degenerate_status():
    r = Record("x", "free", 3, 16, 4.0, 1.0, None, None, "ratio", None)
    assert r.as_row()[-2:] == ["na", "degenerate"]
    r = Record("x", "free", 3, 16, 4.0, 1.0, 0.5, 1.0, "ratio", 0.25, "ok")
    assert r.as_row() == ["x", "free", "3", "16", "4", "1", "0.5", "1", "ratio", "0.25", "ok"]


def test_csv_roundtrip(tmp_path):
    recs = [Record("x", "free", 3, 16, 4.0, 1.0, 0.5, None, "mc", 1.2345678901234567)]
    rows = read_csv(write_csv(recs, tmp_path / "a" / "r.csv"))
    assert list(rows[0]) == list(COLUMNS) and rows[0]["value"] == "1.23456789012"


def test_svg_is_deterministic(tmp_path):
    series = {"a": ([1, 2, 4], [1.0, 0.5, 0.25]), "b": ([1, 2, 4], [2.0, 1.0, 0.4])}
    a = plot_series(series, tmp_path / "a.svg", "x", "y", "t").read_bytes()
    b = plot_series(series, tmp_path / "b.svg", "x", "y", "t").read_bytes()
    assert a == b and a.startswith(b"<?xml")


def test_sources():
    g = build_grid(3, 4.0, 32)
    sheet = make_source("sheet", g, width=1.0, thickness=0.1)
    # unit mass across the plane (normal profile integrates to one)
    line = sheet[:, g.n // 2, g.n // 2].real
    assert np.sum(line) * g.h == pytest.approx(math.exp(-(g.axis[g.n // 2] ** 2) / 1.0), rel=0.02)
    assert make_source("point", g).real.sum() * g.cell_volume == pytest.approx(1.0)
    assert not np.any(make_source("zero", g))
    with pytest.raises(ValueError):
        make_source("bogus", g)


def test_problem_radius_and_params():
    g = build_grid(3, 8.0, 32)
    p = ResolventProblem(g, make_fields(3), 1.0, 0.5, make_source("gaussian", g), AbsorbingLayerConfig())
    assert p.r_max == 6.0 - g.h
    q = p.with_params(eps=0.25)
    assert q.eps == 0.25 and q.lam == 1.0 and p.eps == 0.5
    assert ResolventProblem(g, make_fields(3), 1.0, 0.5, p.f).r_max == 8.0 - g.h
