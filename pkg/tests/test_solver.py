import numpy as np
import pytest

from emhelm.fields import gauge_function, gauge_phase, gauge_transform, make_fields
from emhelm.grid import build_grid
from emhelm.operator import AbsorbingLayerConfig, assemble
from emhelm.problem import make_source
from emhelm.solver import NonConvergence, solve


@pytest.fixture(scope="module")
def setup():
    g = build_grid(3, 4.0, 16)
    f = make_source("gaussian", g)
    return g, f


def test_zero_rhs(setup):
    g, _ = setup
    op = assemble(g, make_fields(3), 1.0, 0.5)
    u, st = solve(op, np.zeros(g.shape))
    assert st.iterations == 0 and not np.any(u)


@pytest.mark.parametrize("method", ["iterative", "direct", "auto"])
def test_residual_contract(setup, method):
    g, f = setup
    op = assemble(g, make_fields(3, A={"family": "singular", "gamma": 1.5}), 2.0, 0.25)
    u, st = solve(op, f, tol=1e-9, method=method)
    res = np.linalg.norm((op @ u - f).ravel()) / np.linalg.norm(f.ravel())
    assert res <= 1e-9 and st.residual == pytest.approx(res)


def test_gauge_shifted_problem(setup):
    g, f = setup
    fields = make_fields(3, A="constant")
    chi = gauge_function("general")
    u, _ = solve(assemble(g, fields, 1.0, 0.5), f, tol=1e-11)
    D = gauge_phase(chi, g)
    u2, _ = solve(assemble(g, gauge_transform(fields, chi), 1.0, 0.5), D * f, tol=1e-11)
    assert np.linalg.norm(u2 - D * u) <= 1e-9 * np.linalg.norm(u)


@pytest.mark.parametrize("lam,eps", [(1.0, 0.5), (4.0, 0.05), (9.0, 1e-3)])
def test_eps_monotonicity(setup, lam, eps):
    g, f = setup
    op = assemble(g, make_fields(3, V2="short_range"), lam, eps)
    u, _ = solve(op, f, tol=1e-10)
    assert eps * g.integrate(np.abs(u) ** 2) <= g.integrate(np.abs(f) * np.abs(u))


def test_warm_start_needs_fewer_iterations():
    g = build_grid(3, 4.0, 24)
    f = make_source("gaussian", g)
    lay = AbsorbingLayerConfig()
    u1, s1 = solve(assemble(g, make_fields(3), 4.0, 0.1, lay), f, tol=1e-8, method="iterative")
    _, s2 = solve(assemble(g, make_fields(3), 4.0, 0.05, lay), f, tol=1e-8, x0=u1, method="iterative")
    _, s3 = solve(assemble(g, make_fields(3), 4.0, 0.05, lay), f, tol=1e-8, method="iterative")
    assert s2.iterations < s3.iterations


def test_nonconvergence_raised():
    g = build_grid(3, 8.0, 40)  # above the direct-solve limit
    f = make_source("gaussian", g)
    op = assemble(g, make_fields(3), 16.0, 1e-3, AbsorbingLayerConfig())
    with pytest.raises(NonConvergence) as exc:
        solve(op, f, tol=1e-10, max_iter=3)
    assert exc.value.iterations <= 3 + 50 and exc.value.residual > 1e-10


def test_rejects_bad_inputs(setup):
    g, f = setup
    op = assemble(g, make_fields(3), 1.0, 0.5)
    with pytest.raises(ValueError):
        solve(op, f, tol=0.5)
    with pytest.raises(ValueError):
        solve(op, f[:2])
    with pytest.raises(ValueError):
        solve(op, f, method="cg")
