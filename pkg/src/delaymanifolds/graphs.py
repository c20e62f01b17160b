"""Taylor graphs of the local invariant manifolds.

Each manifold is represented as a graph over a subset of the splitting
coordinates: the center-stable manifold as u = w(c, s), the
center-unstable one as s = w(u, c), and the center one as (u, s) = w(c).
On top of the graph the transversal component z is slaved to the solution
manifold constraint, so a lifted point satisfies phi'(0) = f(phi) to the
expansion order.

The invariance equations are solved in the coarser splitting
(C_u, C_c, E_s) with the full stable subspace E_s kept together: the
compression of the generator onto Y_s alone is numerically singular
(the stable block is strongly non-normal and maps Y_s directions almost
entirely into Z), while the generator restricted to E_s in an orthonormal
basis is well conditioned.  The solved graph is converted to the
(Y_s, Z) representation afterwards, with the z-components recomputed
from the constraint row.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .models import DelayModel, fhat_series
from .polyseries import MPoly, poly_lincomb
from .segments import Segment, from_flat
from .spectral import SpectralDecomposition

DOMAINS = {
    "center_stable": (("c", "s"), ("u",)),
    "center_unstable": (("u", "c"), ("s",)),
    "center": (("c",), ("u", "s")),
}

RESONANCE_TOL = 1e-8


class GraphError(RuntimeError):
    pass


def _real_poly(p: MPoly, tol: float = 1e-8) -> MPoly:
    """Strip roundoff imaginary parts of a conjugate-symmetric result."""
    worst = max((abs(c.imag) for c in p.terms.values()), default=0.0)
    scale = max(1.0, p.max_abs())
    if worst > tol * scale:
        raise GraphError(f"expected real coefficients, imaginary residue "
                         f"{worst:.2e}")
    return MPoly(p.nvars, {e: complex(c.real) for e, c in p.terms.items()
                           if c.real != 0.0})


def _small_block(M: np.ndarray, name: str):
    """Eigendecomposition of a small well-conditioned real block."""
    if M.size == 0:
        z = np.zeros((0, 0), complex)
        return np.zeros(0, complex), z, z
    lam, T = np.linalg.eig(M)
    order = np.lexsort((np.imag(lam), -np.real(lam)))
    lam, T = lam[order], T[:, order].astype(complex)
    for j in range(T.shape[1]):
        piv = int(np.argmax(np.abs(T[:, j])))
        T[:, j] = T[:, j] / T[piv, j]
    if np.linalg.cond(T) > 1e8:
        raise GraphError(f"{name} block is too close to defective for "
                         f"diagonalization")
    return lam, T, np.diag(lam)


def _monomials(nv: int, p: int):
    """Exponent tuples of total degree p in nv variables."""
    if nv == 0:
        return
    if nv == 1:
        yield (p,)
        return
    for lead in range(p, -1, -1):
        for rest in _monomials(nv - 1, p - lead):
            yield (lead,) + rest


def _derivation(p: MPoly, U: np.ndarray, kmax: int) -> MPoly:
    """Dp(xi) . (U xi), the derivation along the linear flow xi' = U xi."""
    nv = p.nvars
    out = MPoly(nv)
    for dd in range(nv):
        dp = p.diff(dd)
        if dp.is_zero():
            continue
        row = MPoly.linear(U[dd])
        if not row.is_zero():
            out.iadd(dp.mul(row, kmax))
    return out


def _check_divisor(div: complex, e: tuple, lam_dom: np.ndarray, mu: complex,
                   p: int):
    if abs(div) <= RESONANCE_TOL:
        combo = " + ".join(f"{k}*({lam_dom[i]:.6g})"
                           for i, k in enumerate(e) if k)
        raise GraphError(
            f"resonance at order {p}: {combo} - ({mu:.6g}) = "
            f"{div:.3e} below {RESONANCE_TOL}")


def _solve_order_diagonal(w: list, rhs_polys: list, lam_dom: np.ndarray,
                          U_cod: np.ndarray, p: int):
    """Order-p coefficients when the domain linear part is diagonal.

    The codomain block may be triangular, so each monomial takes one
    back-substitution over the codomain components.
    """
    d_cod = len(w)
    monos = sorted(set().union(*[set(r.terms) for r in rhs_polys]))
    for e in monos:
        base = np.dot(e, lam_dom)
        for j in range(d_cod):
            _check_divisor(base - U_cod[j, j], e, lam_dom, U_cod[j, j], p)
        M = base * np.eye(d_cod) - U_cod
        r = np.array([rhs_polys[j].coeff(e) for j in range(d_cod)])
        x = scipy.linalg.solve_triangular(M, r)
        for j in range(d_cod):
            if x[j] != 0:
                w[j].terms[e] = w[j].terms.get(e, 0.0) + x[j]


def _solve_order_coupled(w: list, rhs_polys: list, lam_dom: np.ndarray,
                         N_dom: np.ndarray, U_cod: np.ndarray, p: int):
    """Order-p coefficients when the domain linear part is triangular.

    The derivation along the strictly-triangular domain coupling mixes
    monomials of the same order, so all of them are solved together.
    """
    nv = len(lam_dom)
    d_cod = len(w)
    monos = list(_monomials(nv, p))
    pos = {e: i for i, e in enumerate(monos)}
    nm = len(monos)
    dim = d_cod * nm
    if dim > 40000:
        raise GraphError(
            f"coupled homological system of size {dim} at order {p}; "
            f"reduce the expansion order or the number of grid nodes")

    L = np.zeros((dim, dim), complex)
    for i, e in enumerate(monos):
        base = np.dot(e, lam_dom)
        for j in range(d_cod):
            row = j * nm + i
            _check_divisor(base - U_cod[j, j], e, lam_dom, U_cod[j, j], p)
            L[row, row] += base
            for j2 in range(d_cod):
                if U_cod[j, j2] != 0:
                    L[j * nm + i, j2 * nm + i] -= U_cod[j, j2]
        # xi_b d/d xi_a acting on monomial e, weighted by N_dom[a, b]
        for a in range(nv):
            if e[a] == 0:
                continue
            for b in range(nv):
                c = N_dom[a, b]
                if c == 0:
                    continue
                shifted = list(e)
                shifted[a] -= 1
                shifted[b] += 1
                tgt = pos[tuple(shifted)]
                for j in range(d_cod):
                    L[j * nm + tgt, j * nm + i] += c * e[a]
    rhs = np.zeros(dim, complex)
    for j in range(d_cod):
        for e, c in rhs_polys[j].terms.items():
            rhs[j * nm + pos[e]] = c
    x = np.linalg.solve(L, rhs)
    for j in range(d_cod):
        for i, e in enumerate(monos):
            v = x[j * nm + i]
            if v != 0:
                w[j].terms[e] = w[j].terms.get(e, 0.0) + v


@dataclass
class GraphMap:
    """Polynomial graph of one invariant manifold, with slaved z.

    The stored series have real coefficients and live directly in the
    real splitting coordinates: cod_series maps the domain coordinates to
    the codomain block(s), z_series to the transversal components.
    """

    model: DelayModel
    decomp: SpectralDecomposition
    which: str
    order: int
    dom_names: tuple
    cod_names: tuple
    cod_series: list = field(repr=False)
    z_series: list = field(repr=False)
    domain_radius: float = 0.05
    diagnostics: dict = field(default_factory=dict)

    @property
    def dim_dom(self) -> int:
        d = self.decomp
        return sum({"u": d.dim_u, "c": d.dim_c, "s": d.dim_s}[b]
                   for b in self.dom_names)

    @property
    def dim_cod(self) -> int:
        return len(self.cod_series)

    def dom_slice(self, name: str) -> slice:
        d = self.decomp
        widths = {"u": d.dim_u, "c": d.dim_c, "s": d.dim_s}
        start = 0
        for b in self.dom_names:
            if b == name:
                return slice(start, start + widths[b])
            start += widths[b]
        raise KeyError(name)

    def _indices(self, names) -> np.ndarray:
        idx = []
        for b in names:
            s = self.decomp._block(b)
            idx.extend(range(s.start, s.stop))
        return np.array(idx, dtype=int)

    def _check(self, y: np.ndarray, strict: bool) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.shape != (self.dim_dom,):
            raise GraphError(f"domain point has shape {y.shape}, expected "
                             f"({self.dim_dom},)")
        if strict and np.max(np.abs(y), initial=0.0) > self.domain_radius:
            raise GraphError(
                f"domain point with norm {np.max(np.abs(y)):.3g} outside "
                f"the validity box of radius {self.domain_radius}")
        return y

    def cod(self, y: np.ndarray, strict: bool = True) -> np.ndarray:
        """Graph value w(y) in real splitting coordinates."""
        y = self._check(y, strict)
        return np.array([p.eval(y).real for p in self.cod_series])

    def z_at(self, y: np.ndarray, strict: bool = True) -> np.ndarray:
        y = self._check(y, strict)
        return np.array([p.eval(y).real for p in self.z_series])

    def lift(self, y: np.ndarray, strict: bool = True) -> Segment:
        """Segment over the domain point y."""
        d = self.decomp
        eta = np.zeros(d.grid.size)
        eta[self._indices(self.dom_names)] = self._check(y, strict)
        eta[self._indices(self.cod_names)] = self.cod(y, strict)
        eta[d._block("z")] = self.z_at(y, strict)
        return from_flat(d.grid, d.V @ eta)

    def jacobian(self, y: np.ndarray, strict: bool = True):
        """(Dw, Dz) with respect to the real domain coordinates."""
        y = self._check(y, strict)
        nd = self.dim_dom
        Dw = np.array([[p.diff(j).eval(y).real for j in range(nd)]
                       for p in self.cod_series]).reshape(self.dim_cod, nd)
        Dz = np.array([[p.diff(j).eval(y).real for j in range(nd)]
                       for p in self.z_series]).reshape(len(self.z_series),
                                                        nd)
        return Dw, Dz

    def compose(self, args: list, kmax: int):
        """Substitute polynomial maps for the domain coordinates.

        args has one polynomial per domain coordinate.  Returns
        (cod polys, z polys) in the variables of args.
        """
        cod = [p.compose(args, kmax) for p in self.cod_series]
        zz = [p.compose(args, kmax) for p in self.z_series]
        return cod, zz


def solve_graph(m: DelayModel, decomp: SpectralDecomposition, which: str,
                order: int, domain_radius: float = 0.05) -> GraphMap:
    """Compute the Taylor graph of one invariant manifold to given order."""
    if which not in DOMAINS:
        raise GraphError(f"unknown manifold kind {which!r}; expected one of "
                         f"{sorted(DOMAINS)}")
    if order < 2:
        raise GraphError(f"expansion order must be at least 2, got {order}")
    dom_names, cod_names = DOMAINS[which]
    d = decomp
    n, grid = d.n, d.grid
    sz = grid.size
    du, dc, ds = d.dim_u, d.dim_c, d.dim_s

    # orthonormal basis of the full stable subspace; R converts its
    # coordinates back to the (Y_s, Z) splitting coordinates
    E_basis = np.column_stack([d.basis_Ys, d.basis_Z])
    Q_E, R_E = np.linalg.qr(E_basis)
    A_E = Q_E.T @ d.A @ Q_E
    U_E, Q_sch = scipy.linalg.schur(A_E.astype(complex), output="complex")
    lam_E = np.diag(U_E).copy()

    lam_u, T_u, U_u = _small_block(d.block_u, "unstable")
    lam_c, T_c, U_c = _small_block(d.block_c, "center")

    # coarse splitting blocks: name -> (nodal basis, transform to complex
    # solver coordinates, eigenvalues, triangular linear part)
    coarse = {
        "u": (d.basis_u, T_u, lam_u, U_u),
        "c": (d.basis_c, T_c, lam_c, U_c),
        "E": (Q_E, Q_sch, lam_E, U_E),
    }
    solver_dom = tuple("E" if b == "s" else b for b in dom_names)
    solver_cod = tuple("E" if b == "s" else b for b in cod_names)

    lam_dom = np.concatenate([coarse[b][2] for b in solver_dom])
    lam_cod = (np.concatenate([coarse[b][2] for b in solver_cod])
               if solver_cod else np.zeros(0, complex))
    U_dom = scipy.linalg.block_diag(*[coarse[b][3] for b in solver_dom])
    U_cod = scipy.linalg.block_diag(*[coarse[b][3] for b in solver_cod])
    N_dom = U_dom - np.diag(lam_dom) if U_dom.size else U_dom
    dom_coupled = bool(N_dom.size) and np.max(np.abs(N_dom)) > 1e-12

    nv = len(lam_dom)
    d_cod = len(lam_cod)
    xi_vars = [MPoly.var(nv, i) for i in range(nv)]

    # nodal lift of the solver coordinates
    L_dom = np.hstack([coarse[b][0] @ coarse[b][1] for b in solver_dom])
    L_cod = (np.hstack([coarse[b][0] @ coarse[b][1] for b in solver_cod])
             if d_cod else np.zeros((sz, 0)))
    A0 = d.A[:n, :]                       # node-0 rows: the linear part

    # complex-coordinate rows extracting each block from a nodal vector
    sl_s, sl_z = d._block("s"), d._block("z")
    dual_E = R_E @ np.vstack([d.Vinv[sl_s, :], d.Vinv[sl_z, :]])

    def block_rows(names):
        mats = []
        for b in names:
            _, T, _, _ = coarse[b]
            if b == "E":
                rows = np.conj(T).T @ dual_E
            else:
                rows = np.linalg.inv(T) @ d.Vinv[d._block(b), :]
            mats.append(rows)
        return np.vstack(mats) if mats else np.zeros((0, sz))

    CN_dom = block_rows(solver_dom)[:, :n]
    CN_cod = block_rows(solver_cod)[:, :n] if d_cod else np.zeros((0, n))

    w = [MPoly.zero(nv) for _ in range(d_cod)]

    def nodal_polys():
        phi = poly_lincomb(L_dom, xi_vars)
        if d_cod:
            add = poly_lincomb(L_cod, w)
            phi = [a + b for a, b in zip(phi, add)]
        return phi

    def nonlinearity(polys, p_max):
        F = fhat_series(m, grid, polys, p_max)
        lin = poly_lincomb(A0, polys)
        out = []
        for f_i, l_i in zip(F, lin):
            r = f_i - l_i
            r = MPoly(r.nvars, {e: c for e, c in r.terms.items()
                                if sum(e) >= 2})
            out.append(r.truncate(p_max))
        return out

    for p in range(2, order + 1):
        if d_cod == 0:
            break
        N0 = nonlinearity(nodal_polys(), p)
        NC = poly_lincomb(CN_cod, N0)
        ND = poly_lincomb(CN_dom, N0)
        rhs_polys = []
        for j in range(d_cod):
            cross = MPoly.zero(nv)
            for dd in range(nv):
                dw = w[j].diff(dd)
                if not dw.is_zero() and not ND[dd].is_zero():
                    cross.iadd(dw.mul(ND[dd], p))
            rhs_polys.append((NC[j] - cross).homogeneous(p))
        if dom_coupled:
            _solve_order_coupled(w, rhs_polys, lam_dom, N_dom, U_cod, p)
        else:
            _solve_order_diagonal(w, rhs_polys, lam_dom, U_cod, p)

    # residual of the invariance equation, orders <= requested
    resid = 0.0
    if d_cod:
        N0 = nonlinearity(nodal_polys(), order)
        NC = poly_lincomb(CN_cod, N0)
        ND = poly_lincomb(CN_dom, N0)
        Ucw = poly_lincomb(U_cod, w)
        for j in range(d_cod):
            lhs = _derivation(w[j], U_dom, order)
            for dd in range(nv):
                dw = w[j].diff(dd)
                if not dw.is_zero() and not ND[dd].is_zero():
                    lhs.iadd(dw.mul(ND[dd], order))
            rhs = Ucw[j] + NC[j]
            resid = max(resid, (lhs - rhs).truncate(order).max_abs())
        if resid > 1e-9:
            raise GraphError(f"invariance-equation residual {resid:.2e} "
                             f"after coefficient solve")

    return _to_split_coordinates(m, d, which, order, dom_names, cod_names,
                                 solver_dom, coarse, R_E, w, domain_radius,
                                 resid)


def _to_split_coordinates(m, d, which, order, dom_names, cod_names,
                          solver_dom, coarse, R_E, w, domain_radius, resid):
    """Convert the solver-coordinate graph to the (u, c, s, z) splitting.

    The E-components are split into Y_s and Z parts through the QR factor;
    z is then recomputed from the constraint row so lifted points satisfy
    phi'(0) = f(phi) to the expansion order.
    """
    n, sz = d.n, d.grid.size
    du, dc, ds = d.dim_u, d.dim_c, d.dim_s
    widths = {"u": du, "c": dc, "s": ds}
    nd = sum(widths[b] for b in dom_names)
    y_vars = [MPoly.var(nd, i) for i in range(nd)]

    # domain coordinates in solver variables: y = (u, c, s) pieces with
    # s entering the solver through the E block, z still unknown
    z_series = [MPoly.zero(nd) for _ in range(n)]
    R_inv = np.linalg.inv(R_E)

    def solver_args():
        """Solver complex coordinates as polynomials in y (and z)."""
        args = []
        pos = 0
        for b, sb in zip(dom_names, solver_dom):
            wd = widths[b]
            yb = y_vars[pos:pos + wd]
            pos += wd
            if sb == "E":
                # e = R [s; z], xi_E = Q_sch^dagger e
                vec = yb + z_series
                Tmix = np.conj(coarse["E"][1]).T @ R_E
                args.extend(poly_lincomb(Tmix, vec))
            else:
                T_inv = np.linalg.inv(coarse[b][1])
                args.extend(poly_lincomb(T_inv, yb))
        return args

    def cod_from_w(comp_w):
        """Split composed solver-codomain polys into named blocks."""
        out = {}
        pos = 0
        for b in cod_names:
            if b == "s":
                dE = ds + n
                block = comp_w[pos:pos + dE]
                pos += dE
                e_real = poly_lincomb(coarse["E"][1], block)
                sz_coords = poly_lincomb(R_inv, e_real)
                out["s"] = [_real_poly(p) for p in sz_coords[:ds]]
                out["z_from_w"] = [_real_poly(p) for p in sz_coords[ds:]]
            else:
                wd = widths[b]
                block = comp_w[pos:pos + wd]
                pos += wd
                out[b] = [_real_poly(p) for p in
                          poly_lincomb(coarse[b][1], block)]
        return out

    V_dom = np.hstack([{"u": d.basis_u, "c": d.basis_c,
                        "s": d.basis_Ys}[b] for b in dom_names])
    V_cod = np.hstack([{"u": d.basis_u, "c": d.basis_c,
                        "s": d.basis_Ys}[b] for b in cod_names])
    V_z = d.basis_Z
    A0 = d.A[:n, :]
    M_z_inv = np.linalg.inv(d.B_rows @ d.basis_Z)

    z_mismatch = 0.0
    cod_named = None
    for p in range(2, order + 1):
        comp_w = [q.compose(solver_args(), order) for q in w]
        cod_named = cod_from_w(comp_w)
        cod_polys = []
        for b in cod_names:
            cod_polys.extend(cod_named[b])
        phi = poly_lincomb(V_dom, y_vars)
        if cod_polys:
            add = poly_lincomb(V_cod, cod_polys)
            phi = [a + b2 for a, b2 in zip(phi, add)]
        addz = poly_lincomb(V_z, z_series)
        phi = [a + b2 for a, b2 in zip(phi, addz)]
        F = fhat_series(m, d.grid, phi, p)
        lin = poly_lincomb(A0, phi)
        rhs = []
        for f_i, l_i in zip(F, lin):
            r = f_i - l_i
            rhs.append(MPoly(nd, {e: c for e, c in r.terms.items()
                                  if sum(e) == p}))
        for z_i, upd in zip(z_series, poly_lincomb(M_z_inv, rhs)):
            z_i.iadd(_real_poly(upd))

    z_series = [p.chop(1e-14) for p in z_series]
    cod_series = []
    if cod_named is not None:
        for b in cod_names:
            cod_series.extend(q.chop(1e-14) for q in cod_named[b])
        if "z_from_w" in cod_named:
            z_mismatch = max(
                (a - b).max_abs()
                for a, b in zip(cod_named["z_from_w"], z_series))
    else:
        cod_series = []

    return GraphMap(
        model=m, decomp=d, which=which, order=order, dom_names=dom_names,
        cod_names=cod_names, cod_series=cod_series, z_series=z_series,
        domain_radius=domain_radius,
        diagnostics={"invariance_residual": resid,
                     "constraint_consistency": z_mismatch})
