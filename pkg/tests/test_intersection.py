import time

import numpy as np
import pytest

from delaymanifolds.models import DelayModel
from delaymanifolds.segments import make_grid
from delaymanifolds.semiflow import xf_defect
from delaymanifolds.spectral import build_chart, decompose
from delaymanifolds.graphs import solve_graph
from delaymanifolds.intersection import (G_eval, G_jacobian_23, build_system,
                                         build_wc, dwc, lift, solve_g,
                                         wc_alternative)


@pytest.fixture(scope="module")
def wright():
    m = DelayModel(["-(pi/2)*(x + x**2)"], "1", 1.0)
    d = decompose(m, make_grid(1.0, 1, 24))
    return m, d, build_system(m, d, 3)


@pytest.fixture(scope="module")
def planar():
    m = DelayModel(["0*x1", "-x2 + x1**2"], "0", 0.5)
    d = decompose(m, make_grid(0.5, 2, 12))
    return m, d, build_system(m, d, 4)


@pytest.fixture(scope="module")
def mixed():
    m = DelayModel(["E*x1 + x2**2", "-(pi/2)*x2"], "1", 1.0)
    d = decompose(m, make_grid(1.0, 2, 12))
    return m, d, build_system(m, d, 2)


def test_g_vanishes_at_origin(wright):
    m, d, sys = wright
    ru, rs = G_eval(sys, np.zeros(d.dim_c), np.zeros(d.dim_u),
                    np.zeros(d.dim_s))
    assert np.max(np.abs(ru), initial=0.0) < 1e-12
    assert np.max(np.abs(rs), initial=0.0) < 1e-12


def test_jacobian_identity_at_origin(wright):
    m, d, sys = wright
    J = G_jacobian_23(sys, np.zeros(d.dim_c), np.zeros(d.dim_u),
                      np.zeros(d.dim_s))
    assert np.max(np.abs(J - np.eye(d.dim_u + d.dim_s))) < 1e-10


def test_jacobian_matches_finite_differences(mixed):
    m, d, sys = mixed
    rng = np.random.default_rng(3)
    c = 2e-3 * rng.standard_normal(d.dim_c)
    u = 1e-3 * rng.standard_normal(d.dim_u)
    s = 1e-3 * rng.standard_normal(d.dim_s)
    J = G_jacobian_23(sys, c, u, s)
    eps = 1e-6
    n_us = d.dim_u + d.dim_s
    for j in range(n_us):
        dv = np.zeros(n_us)
        dv[j] = eps
        up, sp = u + dv[:d.dim_u], s + dv[d.dim_u:]
        um, sm = u - dv[:d.dim_u], s - dv[d.dim_u:]
        rp = np.concatenate(G_eval(sys, c, up, sp))
        rm = np.concatenate(G_eval(sys, c, um, sm))
        assert np.max(np.abs((rp - rm) / (2 * eps) - J[:, j])) < 1e-7


def test_newton_converges_fast(wright):
    m, d, sys = wright
    c = 1e-2 * np.ones(d.dim_c) / np.sqrt(d.dim_c)
    u, s, diag = solve_g(sys, c)
    assert diag["iterations"] <= 4
    assert diag["residual"] <= 1e-13
    ru, rs = G_eval(sys, c, u, s)
    assert np.max(np.abs(np.concatenate([ru, rs]))) < 1e-12


def test_fixed_point_identities(wright):
    # at a converged point u = P_u w_cs(c + s) and s = P_Ys w_cu(u + c)
    m, d, sys = wright
    c = np.array([6e-3, -4e-3])
    u, s, _ = solve_g(sys, c)
    assert np.max(np.abs(u - sys.w_cs.cod(np.concatenate([c, s]))),
                  initial=0.0) < 1e-12
    assert np.max(np.abs(s - sys.w_cu.cod(np.concatenate([u, c])))) < 1e-12


def test_lift_on_both_manifolds(wright):
    m, d, sys = wright
    chart = build_chart(m, d)
    psi = lift(sys, chart, np.array([5e-3, 3e-3]))
    assert xf_defect(m, psi) < 1e-10
    # the lifted segment sits on both graphs in chart coordinates
    co = d.coords(psi.flat())
    y_cs = np.concatenate([co["c"], co["s"]])
    assert np.max(np.abs(co["u"] - sys.w_cs.cod(y_cs)), initial=0.0) < 1e-8
    y_cu = np.concatenate([co["u"], co["c"]])
    assert np.max(np.abs(co["s"] - sys.w_cu.cod(y_cu))) < 1e-8


def test_tangency_scaling(wright):
    # residual components of g(c) scale quadratically near 0
    m, d, sys = wright
    radii = [1e-1, 1e-2, 1e-3, 1e-4]
    norms = []
    for r in radii:
        c = r * np.array([1.0, 0.0])
        u, s, _ = solve_g(sys, c)
        norms.append(max(np.max(np.abs(u), initial=0.0),
                         np.max(np.abs(s)), 1e-300))
    slopes = np.diff(np.log10(norms)) / np.diff(np.log10(radii))
    assert np.min(slopes) >= 1.9


def test_dg_zero_at_origin(wright):
    m, d, sys = wright
    eps = 1e-5
    for j in range(d.dim_c):
        c = np.zeros(d.dim_c)
        c[j] = eps
        up, sp, _ = solve_g(sys, c)
        um, sm, _ = solve_g(sys, -c)
        fd = np.concatenate([up - um, sp - sm]) / (2 * eps)
        assert np.max(np.abs(fd)) < 1e-6


def test_wc_matches_center_oracle_wright(wright):
    m, d, sys = wright
    t0 = time.monotonic()
    wc = build_wc(sys)
    oracle = solve_graph(m, d, "center", 3)
    worst = max((a - b).max_abs()
                for a, b in zip(wc.cod_series, oracle.cod_series))
    assert worst < 1e-8
    assert wc.diagnostics["route_mismatch"] < 1e-8
    assert time.monotonic() - t0 < 60.0


def test_wc_matches_center_oracle_planar(planar):
    m, d, sys = planar
    wc = build_wc(sys)
    oracle = solve_graph(m, d, "center", 4)
    worst = max((a - b).max_abs()
                for a, b in zip(wc.cod_series, oracle.cod_series))
    assert worst < 1e-8


def test_wc_structural_tangency(wright):
    m, d, sys = wright
    wc = build_wc(sys)
    for p in wc.cod_series + wc.z_series:
        assert p.min_order() >= 2


def test_wc_alternative_agrees(wright):
    m, d, sys = wright
    wc = build_wc(sys)
    c = np.array([1e-3, -8e-4])
    alt = wc_alternative(sys, c)
    direct = np.concatenate([wc.cod(c)[:d.dim_u], c,
                             wc.cod(c)[d.dim_u:], wc.z_at(c)])
    assert np.max(np.abs(alt - direct)) < 1e-11


def test_dwc_matches_finite_differences(wright):
    m, d, sys = wright
    c = np.array([4e-3, -2e-3])
    eps = 1e-5
    for j in range(d.dim_c):
        psi = np.zeros(d.dim_c)
        psi[j] = 1.0
        der = dwc(sys, c, psi)
        up, sp, _ = solve_g(sys, c + eps * psi)
        um, sm, _ = solve_g(sys, c - eps * psi)
        fd = np.concatenate([up - um, sp - sm]) / (2 * eps)
        assert np.max(np.abs(der - fd)) < 1e-6


def test_mixed_model_wc(mixed):
    # with one genuinely unstable direction the intersection is a proper
    # correction: the u-component of w_c is nonzero
    m, d, sys = mixed
    assert d.dim_u == 1
    wc = build_wc(sys)
    oracle = solve_graph(m, d, "center", 2)
    worst = max((a - b).max_abs()
                for a, b in zip(wc.cod_series, oracle.cod_series))
    assert worst < 1e-8
    assert max(p.max_abs() for p in wc.cod_series[:d.dim_u]) > 1e-6


def test_linear_model_intersection_trivial():
    m = DelayModel(["-(pi/2)*x"], "1", 1.0)
    d = decompose(m, make_grid(1.0, 1, 16))
    sys = build_system(m, d, 3)
    u, s, diag = solve_g(sys, np.array([1e-2, -1e-2]))
    assert diag["iterations"] <= 1
    assert np.max(np.abs(s)) < 1e-12
    wc = build_wc(sys)
    assert all(p.max_abs() < 1e-10 for p in wc.cod_series + wc.z_series)
