import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from delaymanifolds.models import (DelayModel, ModelError, d_e_f_zero,
                                   df_eval, f_eval, taylor_f)
from delaymanifolds.segments import from_flat, from_function, make_grid, zero_segment

MU = np.pi / 2


def wright_linear(h=1.0):
    return DelayModel(["-x"], "1", h)


def wright_hopf(h=1.0):
    return DelayModel([f"-(pi/2)*(x + x**2)"], "1", h)


def test_construction_rejects_nonzero_g0():
    with pytest.raises(ModelError):
        DelayModel(["x + 1"], "1", 1.0)


def test_construction_rejects_bad_delay():
    with pytest.raises(ModelError):
        DelayModel(["-x"], "2", 1.0)          # r = 2 > h = 1
    with pytest.raises(ModelError):
        DelayModel(["-x"], "-1", 1.0)


def test_construction_rejects_unknown_symbol():
    with pytest.raises(ModelError):
        DelayModel(["-y"], "1", 1.0)


def test_f_eval_zero_at_origin():
    grid = make_grid(1.0, 1, 8)
    m = wright_hopf()
    assert np.allclose(f_eval(m, zero_segment(grid)), 0.0, atol=1e-15)


def test_f_eval_shifted_linear():
    # g = -x, r = 1, phi(theta) = theta + 2 -> f = -(-1 + 2) = -1
    grid = make_grid(1.0, 1, 8)
    m = wright_linear()
    phi = from_function(grid, lambda t: t + 2.0)
    assert np.allclose(f_eval(m, phi), -1.0, atol=1e-13)


def test_f_eval_hopf_eigenfunction():
    grid = make_grid(1.0, 1, 16)
    m = DelayModel(["-(pi/2)*x"], "1", 1.0)
    phi = from_function(grid, lambda t: np.cos(np.pi * t / 2))
    assert np.allclose(f_eval(m, phi), 0.0, atol=1e-12)


def test_df_at_zero_is_delay_shift():
    grid = make_grid(1.0, 1, 8)
    m = wright_linear()
    psi = from_function(grid, lambda t: t)
    val = df_eval(m, zero_segment(grid), psi)
    assert np.allclose(val, 1.0, atol=1e-13)


def test_df_matches_finite_differences():
    grid = make_grid(2.0, 1, 16)
    m = DelayModel(["-(pi/2)*(x + x**2)"], "1 + x/2", 2.0)
    rng = np.random.default_rng(3)
    for _ in range(5):
        phi = from_flat(grid, 0.05 * rng.standard_normal(grid.size))
        psi = from_flat(grid, rng.standard_normal(grid.size))
        eps = 1e-5
        fd = (f_eval(m, phi + eps * psi) - f_eval(m, phi - eps * psi)) / (2 * eps)
        an = df_eval(m, phi, psi)
        assert np.max(np.abs(an - fd)) < 1e-6 * max(1.0, np.max(np.abs(an)))


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-1, 1, allow_nan=False), min_size=9, max_size=9),
       st.lists(st.floats(-1, 1, allow_nan=False), min_size=9, max_size=9),
       st.floats(-2, 2, allow_nan=False), st.floats(-2, 2, allow_nan=False))
def test_df_linear_in_direction(v1, v2, a, b):
    grid = make_grid(1.0, 1, 8)
    m = wright_hopf()
    phi = zero_segment(grid)
    p1 = from_flat(grid, np.array(v1))
    p2 = from_flat(grid, np.array(v2))
    lhs = df_eval(m, phi, a * p1 + b * p2)
    rhs = a * df_eval(m, phi, p1) + b * df_eval(m, phi, p2)
    assert np.allclose(lhs, rhs, atol=1e-10 * (1 + abs(a) + abs(b)))


def test_extended_derivative_constant():
    grid = make_grid(1.0, 2, 8)
    m = DelayModel(["-x1", "-0.5*x2"], "1", 1.0)
    c = np.array([2.0, -3.0])
    psi = from_flat(grid, np.tile(c, grid.N + 1))
    assert np.allclose(d_e_f_zero(m, psi), m.dg0() @ c, atol=1e-13)


def test_extended_derivative_agrees_with_df_at_zero():
    grid = make_grid(1.0, 1, 12)
    m = wright_hopf()
    rng = np.random.default_rng(11)
    phi0 = zero_segment(grid)
    for _ in range(100):
        psi = from_flat(grid, rng.standard_normal(grid.size))
        assert np.max(np.abs(d_e_f_zero(m, psi) - df_eval(m, phi0, psi))) < 1e-12


def test_taylor_linear_model_has_no_nonlinear_part():
    grid = make_grid(1.0, 1, 8)
    polys = taylor_f(wright_linear(), grid, 3)
    assert all(p.homogeneous(2).max_abs() < 1e-14 for p in polys)
    assert all(p.homogeneous(3).max_abs() < 1e-14 for p in polys)


def test_taylor_quadratic_constant_delay():
    # g = -x + x^2, r = 1: quadratic term is phi(-1)^2
    grid = make_grid(1.0, 1, 8)
    m = DelayModel(["-x + x**2"], "1", 1.0)
    polys = taylor_f(m, grid, 2)
    rng = np.random.default_rng(5)
    for _ in range(5):
        v = rng.standard_normal(grid.size)
        quad = polys[0].homogeneous(2).eval(v).real
        from delaymanifolds.segments import from_flat, seg_eval
        expected = seg_eval(from_flat(grid, v), -1.0)[0] ** 2
        assert abs(quad - expected) < 1e-10 * max(1.0, abs(expected))


def test_taylor_state_dependent_delay_quadratic():
    # g = -x, r = 1 + x: f = -phi(-1 - phi(0)); quadratic term phi'(-1) phi(0)
    grid = make_grid(2.0, 1, 12)
    m = DelayModel(["-x"], "1 + x", 2.0, check_radius=0.05)
    polys = taylor_f(m, grid, 2)
    rng = np.random.default_rng(7)
    from delaymanifolds.segments import differentiate, from_flat, seg_eval
    for _ in range(5):
        v = rng.standard_normal(grid.size)
        seg = from_flat(grid, v)
        quad = polys[0].homogeneous(2).eval(v).real
        expected = (seg_eval(differentiate(seg), -1.0)
                    * seg_eval(seg, 0.0))[0]
        assert abs(quad - expected) < 1e-9 * max(1.0, abs(expected))


@pytest.mark.parametrize("eps", [1e-2, 1e-3])
def test_taylor_truncation_residual(eps):
    grid = make_grid(2.0, 1, 12)
    m = DelayModel(["-(pi/2)*(x + x**2)"], "1 + x/2", 2.0)
    k = 3
    polys = taylor_f(m, grid, k)
    rng = np.random.default_rng(13)
    v = rng.standard_normal(grid.size)
    v *= eps / np.max(np.abs(v))
    seg = from_flat(grid, v)
    approx = np.array([p.eval(v).real for p in polys])
    resid = np.max(np.abs(f_eval(m, seg) - approx))
    assert resid < 50.0 * eps ** (k + 1)


def test_taylor_truncation_slope():
    grid = make_grid(2.0, 1, 12)
    m = DelayModel(["-(pi/2)*(x + x**2)"], "1 + x/2", 2.0)
    k = 3
    polys = taylor_f(m, grid, k)
    rng = np.random.default_rng(13)
    base = rng.standard_normal(grid.size)
    base /= np.max(np.abs(base))
    resids = []
    for eps in (1e-2, 1e-3):
        v = eps * base
        approx = np.array([p.eval(v).real for p in polys])
        resids.append(np.max(np.abs(f_eval(m, from_flat(grid, v)) - approx)))
    slope = np.log10(resids[0] / resids[1])
    assert slope >= k + 0.5
