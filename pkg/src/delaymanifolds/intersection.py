"""Center manifold as the intersection of the center-stable and
center-unstable manifolds.

The implicit map G(c, u, s) = (u - P_u w_cs(c + s), s - P_Ys w_cu(c + u))
vanishes exactly on the intersection; its (u, s)-Jacobian is a small
perturbation of the identity near 0, so Newton from (0, 0) solves
g(c) = (u, s).  The center graph is assembled both by polynomial
composition of the fixed-point form and by a least-squares fit of sampled
Newton solutions; the two representations must agree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import GraphMap, solve_graph, _monomials
from .polyseries import MPoly
from .segments import Segment
from .spectral import ChartAtlas, SpectralDecomposition


class IntersectionError(RuntimeError):
    pass


@dataclass
class ImplicitSystem:
    """Data of the implicit map G built from the two graphs."""

    w_cs: GraphMap
    w_cu: GraphMap
    decomp: SpectralDecomposition

    @property
    def dims(self):
        d = self.decomp
        return d.dim_c, d.dim_u, d.dim_s

    def _split(self, c, u, s):
        dc, du, ds = self.dims
        c = np.asarray(c, dtype=float).reshape(dc)
        u = np.asarray(u, dtype=float).reshape(du)
        s = np.asarray(s, dtype=float).reshape(ds)
        return c, u, s


def build_system(m, decomp, order: int,
                 domain_radius: float = 0.05) -> ImplicitSystem:
    w_cs = solve_graph(m, decomp, "center_stable", order, domain_radius)
    w_cu = solve_graph(m, decomp, "center_unstable", order, domain_radius)
    return ImplicitSystem(w_cs=w_cs, w_cu=w_cu, decomp=decomp)


def G_eval(sys: ImplicitSystem, c, u, s, strict: bool = False):
    """Residual blocks (u - P_u w_cs(c+s), s - P_Ys w_cu(c+u))."""
    c, u, s = sys._split(c, u, s)
    res_u = u - sys.w_cs.cod(np.concatenate([c, s]), strict)
    res_s = s - sys.w_cu.cod(np.concatenate([u, c]), strict)
    return res_u, res_s


def G_jacobian_23(sys: ImplicitSystem, c, u, s) -> np.ndarray:
    """[[I, -P_u Dw_cs], [-P_Ys Dw_cu, I]] over the (u, s) variables."""
    c, u, s = sys._split(c, u, s)
    dc, du, ds = sys.dims
    Dcs, _ = sys.w_cs.jacobian(np.concatenate([c, s]), strict=False)
    Dcu, _ = sys.w_cu.jacobian(np.concatenate([u, c]), strict=False)
    J = np.eye(du + ds)
    J[:du, du:] -= Dcs[:, dc:]
    J[du:, :du] -= Dcu[:, :du]
    return J


def _newton(sys, c, tol, max_iter):
    dc, du, ds = sys.dims
    u = np.zeros(du)
    s = np.zeros(ds)
    history = []
    for it in range(max_iter):
        ru, rs = G_eval(sys, c, u, s)
        res = np.concatenate([ru, rs])
        nrm = float(np.max(np.abs(res), initial=0.0))
        history.append(nrm)
        if nrm <= tol:
            J = G_jacobian_23(sys, c, u, s)
            return u, s, {"iterations": it, "residual": nrm,
                          "condition": float(np.linalg.cond(J))
                          if J.size else 1.0,
                          "history": history}
        J = G_jacobian_23(sys, c, u, s)
        step = np.linalg.solve(J, -res)
        u = u + step[:du]
        s = s + step[du:]
    return None, None, {"iterations": max_iter, "history": history}


def solve_g(sys: ImplicitSystem, c, tol: float = 1e-13,
            max_iter: int = 50):
    """Newton solve of G(c, u, s) = 0 from (0, 0), with a short
    continuation along the ray to c as fallback."""
    c = np.asarray(c, dtype=float)
    u, s, diag = _newton(sys, c, tol, max_iter)
    if u is None:
        for frac in (0.25, 0.5, 0.75, 1.0):
            u, s, diag = _newton(sys, frac * c, tol, max_iter)
            if u is None:
                raise IntersectionError(
                    f"Newton did not converge at {frac} * c; residual "
                    f"history {diag['history'][-3:]}")
        diag["continuation"] = True
    if diag.get("condition", 1.0) > 1e10:
        diag["warning"] = "ill-conditioned implicit Jacobian"
    return u, s, diag


def lift(sys: ImplicitSystem, chart: ChartAtlas, c) -> Segment:
    """Segment in the intersection of the two manifolds over c."""
    c = np.asarray(c, dtype=float)
    u, s, _ = solve_g(sys, c)
    y = np.concatenate([u, c, s])
    psi = chart.R(y)
    ru, rs = G_eval(sys, c, u, s)
    worst = max(np.max(np.abs(ru), initial=0.0),
                np.max(np.abs(rs), initial=0.0))
    if worst > 1e-8:
        raise IntersectionError(
            f"lifted point violates the graph equations by {worst:.2e}")
    return psi


def wc_alternative(sys: ImplicitSystem, c) -> np.ndarray:
    """Alternative representation c + pi2 g(c) + w_cs(c + pi2 g(c)),
    returned as full splitting coordinates (u, c, s, z)."""
    c, _, s = sys._split(c, *solve_g(sys, np.asarray(c, dtype=float))[:2])
    y_cs = np.concatenate([c, s])
    u_alt = sys.w_cs.cod(y_cs, strict=False)
    z_alt = sys.w_cs.z_at(y_cs, strict=False)
    return np.concatenate([u_alt, c, s, z_alt])


def dwc(sys: ImplicitSystem, c, psi_dir) -> np.ndarray:
    """Directional derivative of the center graph at c: the (u, s)
    components of Dw_c(c) psi."""
    c = np.asarray(c, dtype=float)
    psi_dir = np.asarray(psi_dir, dtype=float)
    dc, du, ds = sys.dims
    u, s, _ = solve_g(sys, c)
    Dcs, _ = sys.w_cs.jacobian(np.concatenate([c, s]), strict=False)
    Dcu, _ = sys.w_cu.jacobian(np.concatenate([u, c]), strict=False)
    J = G_jacobian_23(sys, c, u, s)
    # D_c G blocks
    D1 = np.zeros((du + ds, dc))
    D1[:du] = -Dcs[:, :dc]
    D1[du:] = -Dcu[:, du:]
    Dg = np.linalg.solve(J, -D1) if J.size else np.zeros((0, dc))
    du_dir = Dg[:du] @ psi_dir
    # s-part via Dw_cu(c + pi1 g) [id + pi1 Dg]
    ds_dir = Dcu @ np.concatenate([Dg[:du] @ psi_dir, psi_dir])
    return np.concatenate([du_dir, ds_dir])


def _fit_stencil(sys, order, radius, n_samples, seed=0):
    """Least-squares polynomial fit of g over sampled Newton solutions.

    Fitted through degree order + 2 to absorb the tail of the implicit
    solution; only degrees 2..order are reported.
    """
    dc, du, ds = sys.dims
    rng = np.random.default_rng(seed)
    pts = radius * (2.0 * rng.random((n_samples, dc)) - 1.0)
    fit_deg = order + 2
    monos = []
    for p in range(2, fit_deg + 1):
        monos.extend(_monomials(dc, p))
    V = np.empty((n_samples, len(monos)))
    scale = np.array([radius ** sum(e) for e in monos])
    for i, pt in enumerate(pts):
        for j, e in enumerate(monos):
            V[i, j] = np.prod(pt ** np.array(e)) / scale[j]
    out = np.empty((n_samples, du + ds))
    for i, pt in enumerate(pts):
        u, s, _ = solve_g(sys, pt)
        out[i] = np.concatenate([u, s])
    coef, *_ = np.linalg.lstsq(V, out, rcond=None)
    coef = coef / scale[:, None]
    polys = []
    for jout in range(du + ds):
        terms = {e: complex(coef[j, jout]) for j, e in enumerate(monos)
                 if sum(e) <= order and coef[j, jout] != 0.0}
        polys.append(MPoly(dc, terms))
    return polys


def build_wc(sys: ImplicitSystem, stencil_size: int = 50,
             stencil_radius: float | None = None) -> GraphMap:
    """Center graph w_c over C_c from the intersection construction.

    Route (a): polynomial fixed-point iteration of the composed graphs.
    Route (b): least-squares fit of pointwise Newton solutions.
    The two must agree coefficient-wise within 1e-8.
    """
    d = sys.decomp
    dc, du, ds = sys.dims
    order = sys.w_cs.order
    c_vars = [MPoly.var(dc, i) for i in range(dc)]
    g_u = [MPoly.zero(dc) for _ in range(du)]
    g_s = [MPoly.zero(dc) for _ in range(ds)]
    z_series = [MPoly.zero(dc) for _ in range(d.n)]
    for _ in range(order):
        args_cs = c_vars + g_s
        g_u_new, _ = sys.w_cs.compose(args_cs, order)
        args_cu = g_u_new + c_vars
        g_s_new, z_series = sys.w_cu.compose(args_cu, order)
        delta = max(((a - b).max_abs()
                     for a, b in zip(g_u + g_s, g_u_new + g_s_new)),
                    default=0.0)
        g_u, g_s = g_u_new, g_s_new
        if delta < 1e-15:
            break

    if stencil_radius is None:
        stencil_radius = min(sys.w_cs.domain_radius / 4, 3e-3)
    fitted = _fit_stencil(sys, order, stencil_radius, stencil_size)
    mismatch = 0.0
    for a, b in zip(g_u + g_s, fitted):
        mismatch = max(mismatch, (a - b).max_abs())
    if mismatch > 1e-8:
        raise IntersectionError(
            f"composed and stencil-fitted center graphs disagree by "
            f"{mismatch:.2e} in coefficients")

    return GraphMap(
        model=sys.w_cs.model, decomp=d, which="center", order=order,
        dom_names=("c",), cod_names=("u", "s"),
        cod_series=[p.chop(1e-14) for p in g_u + g_s],
        z_series=[p.chop(1e-14) for p in z_series],
        domain_radius=sys.w_cs.domain_radius,
        diagnostics={"route_mismatch": mismatch,
                     "stencil_radius": stencil_radius,
                     "stencil_size": stencil_size})
