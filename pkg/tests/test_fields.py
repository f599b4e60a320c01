import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emhelm.fields import (
    AssumptionConstants,
    compute_B,
    gauge_function,
    gauge_phase,
    gauge_transform,
    magnetic_potential,
    make_fields,
    sample_fields,
    smoothstep,
    validate_assumptions,
)
from emhelm.grid import build_grid


@pytest.fixture(scope="module")
def g3():
    return build_grid(3, 4.0, 16)


def test_smoothstep_limits_and_derivatives():
    s = np.linspace(-0.5, 1.5, 201)
    v = smoothstep(s)
    assert np.all(v[s <= 0] == 0) and np.all(v[s >= 1] == 1)
    assert np.all(np.diff(v) >= 0)
    for order in (1, 2, 3):
        d = smoothstep(np.array([0.0, 1.0]), order)
        assert np.allclose(d, 0)
    # first derivative matches a finite difference
    x = np.array([0.3, 0.6])
    fd = (smoothstep(x + 1e-6) - smoothstep(x - 1e-6)) / 2e-6
    assert np.allclose(fd, smoothstep(x, 1), rtol=1e-6)


def test_zero_potential_has_zero_field(g3):
    m = compute_B(magnetic_potential("zero"), g3)
    assert m.is_zero and not np.any(m.B_tau)


def test_pure_gauge_has_zero_field(g3):
    m = compute_B(magnetic_potential("gauge", chi="x1x2"), g3)
    assert m.is_zero


def test_constant_field_values(g3):
    m = compute_B(magnetic_potential("constant"), g3)
    assert np.allclose(m.B[0, 1], -2) and np.allclose(m.B[1, 0], 2)
    assert np.allclose(m.B[0, 2], 0) and np.allclose(m.B[1, 2], 0)
    # B_tau at x = (1, 0, 0): (B_tau)_j = sum_k xhat_k B_kj -> (0, B_12, 0) = (0, -2, 0)
    g = build_grid(3, 4.0, 8, offset=False)
    m = compute_B(magnetic_potential("constant"), g)
    idx = (5, 4, 4)
    x = [c[idx] for c in g.full_coords()]
    assert x == [1.0, 0.0, 0.0]
    assert np.allclose(m.B_tau[(slice(None),) + idx], [0, -2, 0])


@pytest.mark.parametrize("family,params", [("constant", {}), ("singular", {"gamma": 1.5}),
                                           ("singular", {"gamma": 2.0})])
def test_antisymmetry_and_tangentiality(g3, family, params):
    m = compute_B(magnetic_potential(family, **params), g3)
    B = m.B
    assert np.max(np.abs(B + np.swapaxes(B, 0, 1))) <= 1e-10 * max(np.max(np.abs(B)), 1e-300)
    X = g3.coords
    dot = sum(m.B_tau[j] * X[j] for j in range(3))
    scale = np.max(np.maximum(m.tau_magnitude, m.magnitude) * g3.radius)
    assert np.max(np.abs(dot)) <= 1e-10 * max(scale, 1e-300)


def test_singular_gamma2_has_no_trapping_part(g3):
    m = compute_B(magnetic_potential("singular", gamma=2.0), g3)
    assert np.max(m.tau_magnitude) < 1e-12 * np.max(m.magnitude)


def test_fd_jacobian_matches_analytic(g3):
    A = magnetic_potential("singular", gamma=1.5)
    from emhelm.fields import MagneticPotential

    A_fd = MagneticPotential("custom", 3, A.base)
    X = (np.array([1.3, -0.7, 2.1]), np.array([0.4, 1.9, -0.5]), np.array([-0.8, 0.6, 1.2]))
    exact = np.array(A.base_jacobian(X, 0.1))
    errs = [np.max(np.abs(np.array(A_fd.base_jacobian(X, h)) - exact)) for h in (0.2, 0.1)]
    assert errs[1] < errs[0] / 3.5


def test_gauge_transform_preserves_B(g3):
    f = make_fields(3, A="constant")
    f2 = gauge_transform(f, gauge_function("x1x2"))
    assert np.array_equal(compute_B(f.A, g3).B, compute_B(f2.A, g3).B)
    assert gauge_transform(f, gauge_function("zero")).A(g3.coords)[0].tolist() == f.A(g3.coords)[0].tolist()


def test_gauge_x1_on_zero():
    g = build_grid(3, 2.0, 8)
    f = gauge_transform(make_fields(3), gauge_function("x1"))
    A = f.A(g.coords)
    assert np.allclose(A[0], 1) and np.allclose(A[1], 0) and np.allclose(A[2], 0)
    assert compute_B(f.A, g).is_zero
    ph = gauge_phase(gauge_function("x1"), g)
    assert np.allclose(np.abs(ph), 1)


def test_validate_V2_near_origin_quotient():
    g = build_grid(3, 4.0, 16)
    f = make_fields(3, V2={"family": "singular", "alpha": 0.5, "amp": 1.0, "radius": 1.0})
    rep = validate_assumptions(f, g, AssumptionConstants(alpha=0.5, c=1.0))
    assert rep.q_V2near == pytest.approx(1.0, rel=1e-12)
    assert rep.passes["V2_near_origin"] is True


def test_validate_long_range_V1_passes():
    g = build_grid(3, 8.0, 32)
    f = make_fields(3, V1={"family": "long_range", "mu": 0.5, "r0": 1.0})
    rep = validate_assumptions(f, g, AssumptionConstants(r0=1.0, mu=0.5, c=2.0))
    assert np.isfinite(rep.q_far)
    assert rep.passes["far_decay"] and rep.passes["V1_vanishes_near_origin"]


def test_constant_field_far_quotient_grows_with_L():
    qs = []
    for L in (4.0, 8.0, 16.0):
        g = build_grid(3, L, 16)
        rep = validate_assumptions(make_fields(3, A="constant"), g)
        qs.append(rep.detail["far_B_tau"])
        assert "far_decay" in rep.failed
    assert qs[0] < qs[1] < qs[2]


def test_admissible_singular_family_passes():
    g = build_grid(3, 4.0, 32)
    f = make_fields(3, A={"family": "singular", "a": 0.5, "gamma": 1.5})
    rep = validate_assumptions(f, g)
    assert rep.ok, rep.failed


def test_sample_fields_rejects_nonfinite():
    g = build_grid(3, 2.0, 8, offset=False)
    f = make_fields(3, V2={"family": "singular"})
    with pytest.raises(ValueError):
        sample_fields(f, g)


def test_unknown_families_rejected():
    with pytest.raises(ValueError):
        make_fields(3, A="bogus")
    with pytest.raises(ValueError):
        make_fields(3, V1="bogus")
    with pytest.raises(ValueError):
        gauge_function("bogus")


@given(st.floats(0.1, 3.0), st.floats(-2, 2))
@settings(max_examples=20, deadline=None)
def test_constant_field_scales_with_b(b, shift):
    g = build_grid(3, 2.0, 8)
    A = magnetic_potential("constant", b=b)
    m = compute_B(A, g)
    assert np.allclose(m.B[0, 1], -2 * b)
    chi = gauge_function("linear", c=[shift, 0.0, 1.0])
    assert np.allclose(compute_B(A.with_gauge(chi), g).B, m.B)
