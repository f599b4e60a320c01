import numpy as np
import pytest

from emhelm.fields import make_fields
from emhelm.grid import build_grid
from emhelm.multipliers import (
    build_multiplier,
    identity_residual_imag,
    identity_residual_morawetz,
    identity_residual_symmetric,
)
from emhelm.operator import assemble
from emhelm.problem import make_source
from emhelm.solver import solve

G = build_grid(3, 8.0, 32)


def _at(m_field, g, radius):
    i = np.argmin(np.abs(g.radius - radius))
    return m_field.ravel()[i], g.radius.ravel()[i]


def test_pv_profile():
    m = build_multiplier("pv", {"R": 4.0, "M": 1.0}, G)
    r = G.radius
    inside = r <= 4
    assert np.allclose(m.dpsi[inside], r[inside] / 8 + 1)
    assert np.allclose(m.dpsi[~inside], 1.5)
    assert np.allclose(m.phi[inside], 1 / 16) and np.all(m.phi[~inside] == 0)
    # continuity of psi' across the kink
    assert abs(4 / 8 + 1 - 1.5) < 1e-15


def test_pv_default_M_depends_on_dimension():
    assert build_multiplier("pv", {}, G).params["M"] == 0.5
    g4 = build_grid(4, 2.0, 8)
    assert build_multiplier("pv", {}, g4).params["M"] == 1.0


def test_sommerfeld_profile():
    m = build_multiplier("sommerfeld", {"delta": 1.0, "r0": 1.0}, G)
    r = G.radius
    assert np.all(m.dpsi[r <= 1] == 0)
    assert np.allclose(m.dpsi[r >= 2], 1 + r[r >= 2])
    assert np.array_equal(m.phi, m.dpsi)


def test_uniqueness_profile():
    m = build_multiplier("uniqueness", {"R": 4.0}, G)
    r = G.radius
    assert np.all(m.dpsi[r < 2] == 0) and np.all(m.phi[r < 2] == 0)
    out = r >= 4
    assert np.allclose(m.dpsi[out], r[out] / 4)
    assert np.allclose(m.phi[out], 1 / 8)
    with pytest.raises(ValueError):
        build_multiplier("uniqueness", {"R": 2.0, "r0": 1.0}, G)


def test_quadratic_profile():
    m = build_multiplier("quadratic", {}, G)
    assert np.allclose(m.lap_psi, 3) and np.allclose(m.grad_lap_psi, 0, atol=1e-12)
    assert np.allclose(m.psi, G.radius**2 / 2, atol=1e-4)


def test_bad_params():
    with pytest.raises(ValueError):
        build_multiplier("sommerfeld", {"delta": 2.0}, G)
    with pytest.raises(ValueError):
        build_multiplier("bogus", {}, G)


@pytest.fixture(scope="module")
def solved():
    out = {}
    for n in (16, 32):
        g = build_grid(3, 4.0, n)
        fields = make_fields(3, A={"family": "singular", "a": 0.5, "gamma": 1.5}, V2="short_range")
        f = make_source("gaussian", g, sigma=0.5)
        op = assemble(g, fields, 1.0, 0.5)
        u, _ = solve(op, f, tol=1e-12)
        out[n] = (g, fields, op, u, f)
    return out


def test_constant_multiplier_exact_energy_identity(solved):
    g, fields, op, u, f = solved[32]
    m = build_multiplier("constant", {}, g)
    rep = identity_residual_imag(u, m, 0.5, op @ u, g, fields, op.phases)
    assert rep.terms["grad_phi"] == 0.0
    assert rep.normalized <= 1e-10
    sym = identity_residual_symmetric(u, m, fields, 1.0, 0.5, op @ u, g, op.phases, op.sampled)
    assert sym.terms["grad_phi"] == 0.0
    assert sym.normalized <= 1e-10


def test_terms_sum_to_residual(solved):
    g, fields, op, u, f = solved[16]
    m = build_multiplier("bump", {"R": 2.0}, g)
    for rep in (identity_residual_symmetric(u, m, fields, 1.0, 0.5, f, g),
                identity_residual_morawetz(u, m, fields, 1.0, 0.5, f, g)):
        assert rep.residual == pytest.approx(sum(v for _, t, v in rep.rows() if t not in ("residual", "normalized")))


@pytest.mark.parametrize("family", ["bump", "sommerfeld"])
def test_refinement_shrinks_residuals(solved, family):
    params = {"R": 2.0} if family == "bump" else {"delta": 1.0, "r0": 0.5}
    res = {}
    for n, (g, fields, op, u, f) in solved.items():
        m = build_multiplier(family, params, g)
        fe = op @ u
        res[n] = [identity_residual_symmetric(u, m, fields, 1.0, 0.5, fe, g, op.phases, op.sampled).normalized,
                  identity_residual_imag(u, m, 0.5, fe, g, fields, op.phases).normalized,
                  identity_residual_morawetz(u, m, fields, 1.0, 0.5, fe, g, op.phases, op.sampled).normalized]
    for a, b in zip(res[16], res[32]):
        assert a / b >= 1.8


def test_random_u_is_not_a_solution(solved):
    g, fields, op, u, f = solved[16]
    rng = np.random.default_rng(1)
    v = rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape)
    m = build_multiplier("bump", {"R": 2.0}, g)
    rep = identity_residual_symmetric(v, m, fields, 1.0, 0.5, f, g)
    assert rep.normalized > 0.1


def test_zero_data_gives_zero_residual():
    g = build_grid(3, 4.0, 16)
    op = assemble(g, make_fields(3), 1.0, 0.5)
    u, _ = solve(op, np.zeros(g.shape))
    rep = identity_residual_imag(u, build_multiplier("pv", {"R": 2.0}, g), 0.5, np.zeros(g.shape), g)
    assert rep.residual == 0.0


def test_trapping_term_vanishes_without_field():
    g = build_grid(3, 4.0, 16)
    fields = make_fields(3, A={"family": "gauge", "chi": "x1x2"})
    op = assemble(g, fields, 1.0, 0.5)
    f = make_source("gaussian", g)
    u, _ = solve(op, f)
    rep = identity_residual_morawetz(u, build_multiplier("quadratic", {}, g), fields, 1.0, 0.5, f, g)
    assert rep.terms["B_tau"] == 0.0


def test_virial_identity_converges():
    # strong absorption so that u is negligible at the box wall, where the
    # quadratic weight would otherwise pick up boundary terms
    out = []
    for n in (16, 32):
        g = build_grid(3, 4.0, n)
        fields = make_fields(3)
        op = assemble(g, fields, 1.0, 2.0)
        f = make_source("gaussian", g, sigma=0.5)
        u, _ = solve(op, f, tol=1e-12)
        m = build_multiplier("quadratic", {}, g)
        out.append(identity_residual_morawetz(u, m, fields, 1.0, 2.0, op @ u, g, op.phases).normalized)
    assert out[0] / out[1] >= 1.8


def test_pv_in_four_dimensions_is_finite():
    g = build_grid(4, 3.0, 12)
    fields = make_fields(4, A={"family": "singular", "gamma": 1.5})
    op = assemble(g, fields, 1.0, 0.5)
    f = make_source("gaussian", g)
    u, _ = solve(op, f)
    rep = identity_residual_morawetz(u, build_multiplier("pv", {"R": 1.0}, g), fields, 1.0, 0.5, op @ u, g)
    assert all(np.isfinite(v) for v in rep.terms.values())
