"""Linearization at the origin: characteristic roots, spectral splitting,
and the solution-manifold chart.

The generator of the linearized equation v'(t) = Dg(0) v(t - r(0)) is
discretized pseudospectrally: differentiation-matrix rows at the interior
nodes, with the row at theta = 0 replaced by the linearized right-hand
side.  Retained center/unstable roots are the discrete eigenvalues that
also annihilate the characteristic function det(lambda I - Dg(0)
exp(-lambda r0)); everything else is lumped into the stable block.

The splitting C^1 = C_u + C_c + Y_s + Z is built A-adapted: Z is the
stable-spectral projection of the default transversal basis, so that the
stable spectral subspace decomposes exactly as Y_s + Z and the generator
is block-diagonal over (unstable, center, stable) coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .models import DelayModel, df_eval, f_eval
from .segments import (GridSpec, Segment, differentiate, from_flat,
                       interp_weights, seg_eval)

CHAR_FILTER_TOL = 1e-6


class SpectralError(RuntimeError):
    pass


def discretized_generator(m: DelayModel, grid: GridSpec) -> np.ndarray:
    """Matrix of the linearized-equation generator on nodal values."""
    n, sz = grid.n, grid.size
    A = np.zeros((sz, sz))
    for p in range(1, grid.N + 1):
        for i in range(n):
            A[p * n + i, i::n] = grid.diff[p]
    w = interp_weights(grid, -m.r0)
    dg0 = m.dg0()
    for i in range(n):
        for j in range(n):
            A[i, j::n] = dg0[i, j] * w
    return A


def constraint_rows(m: DelayModel, grid: GridSpec) -> np.ndarray:
    """Rows B with B phi = phi'(0) - Dg(0) phi(-r0); ker B is the
    discretized tangent space of the solution manifold at 0."""
    n = grid.n
    B = np.zeros((n, grid.size))
    w = interp_weights(grid, -m.r0)
    dg0 = m.dg0()
    for i in range(n):
        B[i, i::n] = grid.diff[0]
        for j in range(n):
            B[i, j::n] -= dg0[i, j] * w
    return B


def characteristic_residual(m: DelayModel, lam: complex) -> complex:
    """det(lam I - Dg(0) exp(-lam r0)); zeros are the true roots."""
    M = lam * np.eye(m.n) - m.dg0() * np.exp(-lam * m.r0)
    return complex(np.linalg.det(M))


def polish_root(m: DelayModel, lam: complex, tol: float = 1e-14,
                max_iter: int = 50) -> complex:
    """Complex Newton on the characteristic determinant."""
    dg0 = m.dg0()
    r0 = m.r0
    I = np.eye(m.n)
    for _ in range(max_iter):
        E = dg0 * np.exp(-lam * r0)
        M = lam * I - E
        Mp = I + r0 * E
        try:
            tr = np.trace(np.linalg.solve(M, Mp))
        except np.linalg.LinAlgError:
            return lam
        if tr == 0:
            return lam
        step = 1.0 / tr
        lam = lam - step
        if abs(step) < tol * (1.0 + abs(lam)):
            return lam
    return lam


@dataclass
class SpectralDecomposition:
    grid: GridSpec
    A: np.ndarray
    eigenvalues: np.ndarray          # all discrete eigenvalues
    tags: list                       # per eigenvalue: unstable/center/stable
    char_residuals: np.ndarray       # |char fn| at each eigenvalue
    roots_u: np.ndarray              # retained, polished
    roots_c: np.ndarray
    basis_u: np.ndarray
    basis_c: np.ndarray
    block_u: np.ndarray              # realified blocks: A basis = basis block
    block_c: np.ndarray
    basis_Ys: np.ndarray
    basis_Z: np.ndarray
    V: np.ndarray = field(repr=False)
    Vinv: np.ndarray = field(repr=False)
    A_hat: np.ndarray = field(repr=False)
    B_rows: np.ndarray = field(repr=False)
    tol_center: float = 1e-8

    @property
    def dim_u(self) -> int:
        return self.basis_u.shape[1]

    @property
    def dim_c(self) -> int:
        return self.basis_c.shape[1]

    @property
    def dim_s(self) -> int:
        return self.basis_Ys.shape[1]

    @property
    def n(self) -> int:
        return self.grid.n

    def _block(self, name: str) -> slice:
        du, dc, ds = self.dim_u, self.dim_c, self.dim_s
        return {"u": slice(0, du), "c": slice(du, du + dc),
                "s": slice(du + dc, du + dc + ds),
                "z": slice(du + dc + ds, None)}[name]

    def proj(self, name: str) -> np.ndarray:
        b = self._block(name)
        return self.V[:, b] @ self.Vinv[b, :]

    def coords(self, vec: np.ndarray) -> dict:
        """Split a flat nodal vector into (u, c, s, z) coordinates."""
        full = self.Vinv @ vec
        return {k: full[self._block(k)] for k in ("u", "c", "s", "z")}

    def assemble(self, u=None, c=None, s=None, z=None) -> np.ndarray:
        full = np.zeros(self.V.shape[1])
        for name, val in (("u", u), ("c", c), ("s", s), ("z", z)):
            if val is not None:
                full[self._block(name)] = val
        return self.V @ full

    def block_matrix(self, rows: str, cols: str) -> np.ndarray:
        return self.A_hat[self._block(rows), self._block(cols)]


def _pair_and_realify(roots, vecs, tol_imag=1e-9):
    """Order conjugate-closed eigenpairs and produce real basis columns.

    Returns (polished root list, real basis, real block matrix).
    """
    order = np.lexsort((np.abs(np.imag(roots)), -np.real(roots)))
    roots = roots[order]
    vecs = vecs[:, order]
    used = np.zeros(len(roots), bool)
    cols, blocks, kept = [], [], []
    for i in range(len(roots)):
        if used[i]:
            continue
        lam, v = roots[i], vecs[:, i]
        j_star = int(np.argmax(np.abs(v)))
        v = v / v[j_star]
        if abs(lam.imag) <= tol_imag:
            used[i] = True
            cols.append(np.real(v))
            blocks.append(np.array([[lam.real]]))
            kept.append(lam)
            continue
        # find the conjugate partner
        partner = None
        for j in range(i + 1, len(roots)):
            if not used[j] and abs(roots[j] - np.conj(lam)) < 1e-6 * (1 + abs(lam)):
                partner = j
                break
        if partner is None:
            raise SpectralError(
                f"complex root {lam} has no conjugate partner")
        used[i] = used[partner] = True
        if lam.imag < 0:
            lam, v = np.conj(lam), np.conj(v)
        a, b = lam.real, lam.imag
        cols.append(np.real(v))
        cols.append(np.imag(v))
        blocks.append(np.array([[a, b], [-b, a]]))
        kept.append(lam)
        kept.append(np.conj(lam))
    basis = (np.column_stack(cols) if cols
             else np.zeros((vecs.shape[0], 0)))
    block = scipy.linalg.block_diag(*blocks) if blocks else np.zeros((0, 0))
    return np.array(kept), basis, block


def _default_z_columns(grid: GridSpec, fallback: bool) -> np.ndarray:
    cols = np.zeros((grid.size, grid.n))
    prof = grid.nodes + (grid.nodes ** 2 / grid.h if fallback else 0.0)
    for i in range(grid.n):
        cols[i::grid.n, i] = prof
    return cols


def decompose(m: DelayModel, grid: GridSpec, polish: bool = True,
              tol_center: float = 1e-8) -> SpectralDecomposition:
    """Spectral splitting of the discretized generator.

    Center/unstable roots are retained only when the characteristic
    residual confirms them; spurious collocation eigenvalues fall into the
    stable lump regardless of their real part.
    """
    A = discretized_generator(m, grid)
    evals, evecs = scipy.linalg.eig(A)
    B = constraint_rows(m, grid)

    tags, residuals = [], np.empty(len(evals))
    polished = np.array(evals, dtype=complex)
    for i, lam in enumerate(evals):
        lam_p = lam
        if polish and lam.real > -1.0:
            cand = polish_root(m, lam)
            if abs(cand - lam) < 1e-4 * (1.0 + abs(lam)):
                lam_p = cand
        polished[i] = lam_p
        residuals[i] = abs(characteristic_residual(m, lam_p))
        genuine = residuals[i] <= CHAR_FILTER_TOL
        if genuine and lam_p.real > tol_center:
            tags.append("unstable")
        elif genuine and abs(lam_p.real) <= tol_center:
            tags.append("center")
        else:
            tags.append("stable")

    idx_u = [i for i, t in enumerate(tags) if t == "unstable"]
    idx_c = [i for i, t in enumerate(tags) if t == "center"]
    if not idx_c:
        raise SpectralError(
            "no center directions: the spectrum has no retained roots on "
            "the imaginary axis (dim C_c = 0)")

    roots_u, basis_u, block_u = _pair_and_realify(
        polished[idx_u], evecs[:, idx_u])
    roots_c, basis_c, block_c = _pair_and_realify(
        polished[idx_c], evecs[:, idx_c])
    du, dc = basis_u.shape[1], basis_c.shape[1]
    if du + dc != len(idx_u) + len(idx_c):
        raise SpectralError("retained eigenvalue multiplicity mismatch; "
                            "defective center/unstable block")

    # spectral projector onto the stable lump, then an orthonormal basis
    sz = grid.size
    idx_uc = idx_u + idx_c
    W = np.linalg.solve(evecs, np.eye(sz))
    P_uc = np.real(evecs[:, idx_uc] @ W[idx_uc, :])
    P_s = np.eye(sz) - P_uc
    U, svals, _ = np.linalg.svd(P_s)
    rank = sz - du - dc
    if not (svals[rank - 1] > 0.5 and (rank == sz or svals[rank] < 0.5)):
        raise SpectralError("stable spectral projector has ambiguous rank")
    Q_s = U[:, :rank]

    # Y_s = stable subspace intersected with ker B
    null = scipy.linalg.null_space(B @ Q_s)
    if null.shape[1] != rank - grid.n:
        raise SpectralError(
            f"unexpected dimension {null.shape[1]} for the stable part of "
            f"the tangent space (expected {rank - grid.n})")
    basis_Ys = Q_s @ null

    basis_Z = None
    for fallback in (False, True):
        cand = P_s @ _default_z_columns(grid, fallback)
        M_z = B @ cand
        if np.linalg.cond(M_z) < 1e12:
            basis_Z = cand
            break
    if basis_Z is None:
        raise SpectralError(
            "transversality matrix is singular for both the default and the "
            "fallback Z basis; provide a custom transversal subspace")

    V = np.column_stack([basis_u, basis_c, basis_Ys, basis_Z])
    if np.linalg.cond(V) > 1e12:
        raise SpectralError("splitting basis is numerically singular")
    Vinv = np.linalg.solve(V, np.eye(sz))
    A_hat = Vinv @ A @ V

    return SpectralDecomposition(
        grid=grid, A=A, eigenvalues=polished, tags=tags,
        char_residuals=residuals, roots_u=roots_u, roots_c=roots_c,
        basis_u=basis_u, basis_c=basis_c, block_u=block_u, block_c=block_c,
        basis_Ys=basis_Ys, basis_Z=basis_Z, V=V, Vinv=Vinv, A_hat=A_hat,
        B_rows=B, tol_center=tol_center)


@dataclass
class ChartAtlas:
    """Chart (K, R) of the solution manifold around the origin.

    K is the projection P onto Y = C_u + C_c + Y_s along Z; its local
    inverse R adds the Z-correction solving phi'(0) = f(phi) by Newton.
    """

    model: DelayModel
    decomp: SpectralDecomposition
    transversality: np.ndarray
    condition_number: float

    @property
    def grid(self) -> GridSpec:
        return self.decomp.grid

    @property
    def Z_basis(self) -> np.ndarray:
        return self.decomp.basis_Z

    @property
    def P(self) -> np.ndarray:
        d = self.decomp
        return d.proj("u") + d.proj("c") + d.proj("s")

    def K(self, phi: Segment) -> np.ndarray:
        """Chart coordinates (u, c, s) of a segment near the origin."""
        co = self.decomp.coords(phi.flat())
        return np.concatenate([co["u"], co["c"], co["s"]])

    def R(self, y: np.ndarray, tol: float = 1e-12,
          max_iter: int = 25) -> Segment:
        """Local inverse of K: the solution-manifold point over y."""
        d = self.decomp
        du, dc = d.dim_u, d.dim_c
        base = d.assemble(u=y[:du], c=y[du:du + dc], s=y[du + dc:])
        from .semiflow import project_to_xf
        return project_to_xf(self.model, from_flat(self.grid, base),
                             d.basis_Z, tol=tol, max_iter=max_iter)


def build_chart(m: DelayModel, decomp: SpectralDecomposition) -> ChartAtlas:
    M_z = decomp.B_rows @ decomp.basis_Z
    cond = float(np.linalg.cond(M_z))
    if cond > 1e12:
        raise SpectralError(
            f"transversality matrix condition {cond:.2e} too large")
    return ChartAtlas(model=m, decomp=decomp, transversality=M_z,
                      condition_number=cond)


def _linearized_model(m: DelayModel) -> DelayModel:
    dg0 = m.dg0()
    exprs = []
    for i in range(m.n):
        terms = [f"({float(dg0[i, j])!r})*x{j + 1}" for j in range(m.n)
                 if dg0[i, j] != 0.0]
        exprs.append(" + ".join(terms) if terms else "0*x1")
    return DelayModel(exprs, repr(float(m.r0)), m.h)


def linear_flow_invariance(m: DelayModel, decomp: SpectralDecomposition,
                           t: float, subspace: str, dt: float = 1e-3) -> float:
    """Relative leakage out of C_u or C_c under the linearized flow."""
    if subspace not in ("C_u", "C_c"):
        raise ValueError(f"subspace must be C_u or C_c, got {subspace}")
    if t == 0.0:
        return 0.0
    basis = decomp.basis_u if subspace == "C_u" else decomp.basis_c
    if basis.shape[1] == 0:
        return 0.0
    P_sub = decomp.proj("u") if subspace == "C_u" else decomp.proj("c")
    lin = _linearized_model(m)
    from .semiflow import flow_map
    worst = 0.0
    for j in range(basis.shape[1]):
        v = basis[:, j]
        seg = from_flat(decomp.grid, v)
        out = flow_map(lin, seg, t, dt=dt, defect_tol=1e-6,
                       check_segments=False).flat()
        leak = np.linalg.norm((np.eye(len(v)) - P_sub) @ out)
        worst = max(worst, leak / np.linalg.norm(v))
    return worst
