"""Right-hand sides x'(t) = g(x(t - r(x(t)))) with exact derivative data.

Models are given by closed-form expressions for g and r over a small
grammar (+, -, *, /, powers, exp, sin, cos, numeric constants, pi), parsed
with sympy so that derivatives up to order 5 are exact.  The stationary
point is always the origin: g(0) = 0 is enforced at construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product as iproduct

import numpy as np
import sympy as sp

from .polyseries import MPoly, compose_taylor, poly_lincomb
from .segments import (GridSpec, Segment, differentiate, interp_weights,
                       seg_eval)

MAX_TAYLOR_ORDER = 5

_ALLOWED_FUNCS = {"sin": sp.sin, "cos": sp.cos, "exp": sp.exp,
                  "pi": sp.pi, "E": sp.E, "sqrt": sp.sqrt}


class ModelError(ValueError):
    pass


def _parse(expr: str, symbols: list[sp.Symbol]) -> sp.Expr:
    loc = dict(_ALLOWED_FUNCS)
    for i, s in enumerate(symbols):
        loc[f"x{i + 1}"] = s
    if len(symbols) == 1:
        loc["x"] = symbols[0]
    try:
        e = sp.sympify(expr, locals=loc)
    except (sp.SympifyError, SyntaxError, TypeError) as exc:
        raise ModelError(f"cannot parse expression {expr!r}: {exc}") from exc
    extra = e.free_symbols - set(symbols)
    if extra:
        raise ModelError(f"unknown symbols {sorted(map(str, extra))} "
                         f"in expression {expr!r}")
    return e


def _derivative_tensors(exprs: list[sp.Expr], symbols: list[sp.Symbol],
                        kmax: int) -> dict[int, np.ndarray]:
    """tensors[o][i, j1..jo] = d^o exprs[i] / dx_{j1}..dx_{jo} at 0."""
    n = len(symbols)
    m = len(exprs)
    origin = {s: 0 for s in symbols}
    tensors = {}
    for o in range(1, kmax + 1):
        T = np.zeros((m,) + (n,) * o)
        for i, e in enumerate(exprs):
            for idx in iproduct(range(n), repeat=o):
                d = sp.diff(e, *[symbols[j] for j in idx])
                T[(i,) + idx] = float(d.subs(origin))
        tensors[o] = T
    return tensors


@dataclass
class DelayModel:
    """State-dependent delay model x'(t) = g(x(t - r(x(t)))).

    g_exprs has one expression per component in variables x1..xn (plain x
    for n = 1); r_expr is a scalar expression in the same variables.
    check_radius bounds the neighborhood on which 0 <= r <= h is sampled.
    """

    g_exprs: list[str]
    r_expr: str
    h: float
    check_radius: float = 0.1

    n: int = field(init=False)
    _g_fun: object = field(init=False, repr=False)
    _dg_fun: object = field(init=False, repr=False)
    _r_fun: object = field(init=False, repr=False)
    _dr_fun: object = field(init=False, repr=False)
    _g_tensors: dict = field(init=False, repr=False)
    _r_tensors: dict = field(init=False, repr=False)

    def __post_init__(self):
        if self.h <= 0:
            raise ModelError(f"delay horizon must be positive, got {self.h}")
        self.n = len(self.g_exprs)
        if self.n < 1:
            raise ModelError("g needs at least one component")
        syms = [sp.Symbol(f"x{i + 1}", real=True) for i in range(self.n)]
        g_sym = [_parse(e, syms) for e in self.g_exprs]
        r_sym = _parse(self.r_expr, syms)
        jac = sp.Matrix(g_sym).jacobian(syms)
        grad_r = sp.Matrix([r_sym]).jacobian(syms)
        self._g_fun = sp.lambdify(syms, g_sym, "numpy")
        self._dg_fun = sp.lambdify(syms, jac, "numpy")
        self._r_fun = sp.lambdify(syms, r_sym, "numpy")
        self._dr_fun = sp.lambdify(syms, grad_r, "numpy")
        self._g_tensors = _derivative_tensors(g_sym, syms, MAX_TAYLOR_ORDER)
        self._r_tensors = _derivative_tensors([r_sym], syms, MAX_TAYLOR_ORDER)
        self._r_tensors = {o: T[0] for o, T in self._r_tensors.items()}

        g0 = self.g(np.zeros(self.n))
        if np.max(np.abs(g0)) > 1e-14:
            raise ModelError(f"g(0) = {g0} must vanish")
        self._check_delay_range()

    def _check_delay_range(self, samples: int = 3):
        pts = np.array(list(iproduct(
            np.linspace(-self.check_radius, self.check_radius, samples),
            repeat=self.n)))
        for xi in pts:
            rv = self.r(xi)
            if rv < -1e-12 or rv > self.h + 1e-12:
                raise ModelError(
                    f"delay r({xi}) = {rv} leaves [0, {self.h}]")

    # -- pointwise evaluation -----------------------------------------
    def g(self, xi: np.ndarray) -> np.ndarray:
        return np.atleast_1d(np.asarray(self._g_fun(*xi), dtype=float))

    def dg(self, xi: np.ndarray) -> np.ndarray:
        return np.asarray(self._dg_fun(*xi), dtype=float).reshape(self.n, self.n)

    def r(self, xi: np.ndarray) -> float:
        return float(self._r_fun(*xi))

    def dr(self, xi: np.ndarray) -> np.ndarray:
        return np.asarray(self._dr_fun(*xi), dtype=float).reshape(self.n)

    @property
    def r0(self) -> float:
        return self.r(np.zeros(self.n))

    def dg0(self) -> np.ndarray:
        return self.dg(np.zeros(self.n))

    def g_tensor(self, order: int) -> np.ndarray:
        if order > MAX_TAYLOR_ORDER:
            raise ModelError(f"derivatives of g available up to order "
                             f"{MAX_TAYLOR_ORDER}, requested {order}")
        return self._g_tensors[order]

    def r_tensor(self, order: int) -> np.ndarray:
        if order > MAX_TAYLOR_ORDER:
            raise ModelError(f"derivatives of r available up to order "
                             f"{MAX_TAYLOR_ORDER}, requested {order}")
        return self._r_tensors[order]


# -- the functional f and its derivatives -----------------------------

def f_eval(m: DelayModel, phi: Segment) -> np.ndarray:
    """f(phi) = g(phi(-r(phi(0))))."""
    rho = m.r(seg_eval(phi, 0.0))
    if rho < -1e-12 or rho > m.h + 1e-12:
        raise ModelError(f"delay r(phi(0)) = {rho} leaves [0, {m.h}]")
    return m.g(seg_eval(phi, -rho))


def df_eval(m: DelayModel, phi: Segment, psi: Segment) -> np.ndarray:
    """Directional derivative Df(phi)psi.

    Chain rule through the deviating argument:
    Df(phi)psi = Dg(a) [psi(-rho) - phi'(-rho) (Dr(phi(0)) . psi(0))]
    with rho = r(phi(0)) and a = phi(-rho).
    """
    phi0 = seg_eval(phi, 0.0)
    rho = m.r(phi0)
    if rho < -1e-12 or rho > m.h + 1e-12:
        raise ModelError(f"delay r(phi(0)) = {rho} leaves [0, {m.h}]")
    a = seg_eval(phi, -rho)
    dphi = differentiate(phi)
    shift = float(m.dr(phi0) @ seg_eval(psi, 0.0))
    inner = seg_eval(psi, -rho) - seg_eval(dphi, -rho) * shift
    return m.dg(a) @ inner


def d_e_f_zero(m: DelayModel, psi: Segment) -> np.ndarray:
    """Extended derivative at the origin, defined on continuous segments.

    No derivative of psi is used, matching the extension from C^1 to C.
    """
    return m.dg0() @ seg_eval(psi, -m.r0)


# -- truncated Taylor expansion of the discretized f ------------------

def fhat_series(m: DelayModel, grid: GridSpec, phi_polys: list[MPoly],
                k: int) -> list[MPoly]:
    """Taylor series of f(phi) for a polynomially parameterized segment.

    phi_polys lists the (N+1)*n nodal values as polynomials in some
    parameter variables (zero constant term).  Returns the n components of
    g(phi(-r(phi(0)))) truncated at total degree k.
    """
    if not 1 <= k <= MAX_TAYLOR_ORDER:
        raise ModelError(f"expansion order must be in [1, {MAX_TAYLOR_ORDER}]")
    n = grid.n
    a = [phi_polys[comp] for comp in range(n)]        # node 0 is index 0
    r_tensors = {o: m.r_tensor(o)[None, ...] for o in range(1, k + 1)}
    rho_dev = compose_taylor(r_tensors, a, k)[0]      # r(a) - r0
    delta = rho_dev.scaled(-1.0)                      # -(rho - r0)

    e_row = interp_weights(grid, -m.r0)
    row = np.zeros(grid.size)
    u = None
    Dj = np.eye(grid.N + 1)
    fact = 1.0
    delta_pow = MPoly.const(phi_polys[0].nvars, 1.0)
    for j in range(0, k + 1):
        row_j = e_row @ Dj                            # phi^{(j)}(-r0) weights
        vj = []
        for comp in range(n):
            w = np.zeros(grid.size)
            w[comp::n] = row_j
            vj.append(poly_lincomb(w[None, :], phi_polys)[0])
        term = [p.mul(delta_pow, k).scaled(1.0 / fact) for p in vj]
        if u is None:
            u = term
        else:
            for comp in range(n):
                u[comp].iadd(term[comp])
        if delta.is_zero():
            break
        Dj = grid.diff @ Dj
        fact *= (j + 1)
        delta_pow = delta_pow.mul(delta, k)
        if delta_pow.is_zero():
            break
    g_tensors = {o: m.g_tensor(o) for o in range(1, k + 1)}
    return compose_taylor(g_tensors, u, k)


def taylor_f(m: DelayModel, grid: GridSpec, k: int) -> list[MPoly]:
    """Expansion of the discretized f in the (N+1)*n nodal coordinates."""
    if not 2 <= k <= MAX_TAYLOR_ORDER:
        raise ModelError(f"expansion order must be in [2, {MAX_TAYLOR_ORDER}]")
    nodal = [MPoly.var(grid.size, i) for i in range(grid.size)]
    return fhat_series(m, grid, nodal, k)
