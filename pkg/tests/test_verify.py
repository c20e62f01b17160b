import numpy as np
import pytest

from delaymanifolds.models import DelayModel
from delaymanifolds.segments import make_grid
from delaymanifolds.spectral import decompose
from delaymanifolds.graphs import solve_graph
from delaymanifolds.intersection import build_system, build_wc
from delaymanifolds.verify import (DefectReport, check_defect_scaling,
                                   check_global_trajectory,
                                   check_positive_invariance,
                                   check_submanifold, check_subset,
                                   check_uniqueness_of_projected_point,
                                   graph_defect)


@pytest.fixture(scope="module")
def wright():
    m = DelayModel(["-(pi/2)*(x + x**2)"], "1", 1.0)
    d = decompose(m, make_grid(1.0, 1, 24))
    sys = build_system(m, d, 3)
    return m, d, sys, build_wc(sys)


@pytest.fixture(scope="module")
def linear():
    m = DelayModel(["-(pi/2)*x"], "1", 1.0)
    d = decompose(m, make_grid(1.0, 1, 16))
    sys = build_system(m, d, 2)
    return m, d, sys, build_wc(sys)


def test_report_pass_flag_matches_comparison():
    r = DefectReport("C1", (1e-3,), 0.0, 2e-9, 1e-8)
    assert r.passed
    r2 = DefectReport("C1", (1e-3,), 0.0, 2e-8, 1e-8)
    assert not r2.passed
    assert r.to_dict()["pass"] is True


def test_graph_defect_zero_on_lifted_point(wright):
    m, d, sys, wc = wright
    flat = wc.lift(np.array([3e-3, -2e-3])).flat()
    dft, y = graph_defect(wc, flat)
    assert dft < 1e-12
    assert np.allclose(y, [3e-3, -2e-3])


def test_submanifold_check(wright):
    m, d, sys, wc = wright
    rep = check_submanifold(m, wc)
    assert rep.passed
    assert f"rank {d.dim_c}" in rep.note


def test_submanifold_check_linear(linear):
    m, d, sys, wc = linear
    assert check_submanifold(m, wc).passed


def test_positive_invariance_wright(wright):
    m, d, sys, wc = wright
    rep = check_positive_invariance(m, wc, 1e-2, 5.0, tol=1e-7)
    assert rep.passed
    assert rep.samples


def test_positive_invariance_shrinks_with_radius(wright):
    m, d, sys, wc = wright
    big = check_positive_invariance(m, wc, 1e-2, 2.0, tol=np.inf)
    small = check_positive_invariance(m, wc, 3e-3, 2.0, tol=np.inf)
    assert small.max_defect < big.max_defect / 30


def test_defect_scaling_slope(wright):
    m, d, sys, wc = wright
    rep = check_defect_scaling(m, wc)
    assert rep.passed  # slope >= order


def test_cs_cu_invariance_proxies(wright):
    m, d, sys, wc = wright
    rep = check_positive_invariance(m, sys.w_cu, 3e-3, 3.0, tol=1e-7,
                                    tag="CU1")
    assert rep.proxy
    assert rep.passed


def test_global_trajectory_proxy(wright):
    m, d, sys, wc = wright
    rep = check_global_trajectory(m, wc, radius=1e-2, T=10.0, tol=1e-6)
    assert rep.proxy
    assert rep.passed
    off = [s["defect"] for s in rep.samples if s["orbit"] == "off"]
    assert off[-1] < off[0]


def test_subset_check(wright):
    m, d, sys, wc = wright
    assert check_subset(m, sys, wc).passed


def test_uniqueness_check(wright):
    m, d, sys, wc = wright
    rep = check_uniqueness_of_projected_point(m, sys, wc)
    assert rep.passed
    kinds = {s["kind"] for s in rep.samples}
    assert kinds == {"lifted", "flowed"}


def test_linear_model_all_trivial(linear):
    m, d, sys, wc = linear
    assert check_positive_invariance(m, wc, 1e-2, 3.0, tol=1e-8).passed
    assert check_subset(m, sys, wc).passed
