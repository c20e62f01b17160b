"""Sparse multivariate polynomial arithmetic for truncated Taylor series.

Coefficients are complex (graph computations run in complex eigenbases);
exponents are dense tuples of length nvars.  All products are truncated at
a caller-supplied total degree, so the algebra is the usual one on jets.
"""

from __future__ import annotations

from itertools import combinations_with_replacement
from math import factorial, prod

import numpy as np


class MPoly:
    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: dict | None = None):
        self.nvars = nvars
        self.terms = terms if terms is not None else {}

    # -- constructors -------------------------------------------------
    @classmethod
    def zero(cls, nvars: int) -> "MPoly":
        return cls(nvars)

    @classmethod
    def const(cls, nvars: int, c: complex) -> "MPoly":
        p = cls(nvars)
        if c != 0:
            p.terms[(0,) * nvars] = c
        return p

    @classmethod
    def var(cls, nvars: int, i: int, coeff: complex = 1.0) -> "MPoly":
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, {tuple(e): coeff}) if coeff != 0 else cls(nvars)

    @classmethod
    def linear(cls, coeffs) -> "MPoly":
        coeffs = np.asarray(coeffs)
        p = cls(len(coeffs))
        for i, c in enumerate(coeffs):
            if c != 0:
                e = [0] * p.nvars
                e[i] = 1
                p.terms[tuple(e)] = complex(c)
        return p

    def copy(self) -> "MPoly":
        return MPoly(self.nvars, dict(self.terms))

    # -- queries ------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def min_order(self) -> int:
        return min((sum(e) for e in self.terms), default=10**9)

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def coeff(self, expo: tuple) -> complex:
        return self.terms.get(expo, 0.0)

    def homogeneous(self, p: int) -> "MPoly":
        return MPoly(self.nvars,
                     {e: c for e, c in self.terms.items() if sum(e) == p})

    def max_abs(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    # -- arithmetic ---------------------------------------------------
    def iadd(self, other: "MPoly", scale: complex = 1.0) -> "MPoly":
        for e, c in other.terms.items():
            v = self.terms.get(e, 0.0) + scale * c
            if v == 0:
                self.terms.pop(e, None)
            else:
                self.terms[e] = v
        return self

    def __add__(self, other: "MPoly") -> "MPoly":
        return self.copy().iadd(other)

    def __sub__(self, other: "MPoly") -> "MPoly":
        return self.copy().iadd(other, -1.0)

    def scaled(self, a: complex) -> "MPoly":
        if a == 0:
            return MPoly(self.nvars)
        return MPoly(self.nvars, {e: a * c for e, c in self.terms.items()})

    def mul(self, other: "MPoly", kmax: int) -> "MPoly":
        """Product truncated to total degree kmax."""
        out: dict = {}
        if len(other.terms) < len(self.terms):
            self, other = other, self
        for e1, c1 in self.terms.items():
            d1 = sum(e1)
            if d1 > kmax:
                continue
            for e2, c2 in other.terms.items():
                if d1 + sum(e2) > kmax:
                    continue
                e = tuple(a + b for a, b in zip(e1, e2))
                v = out.get(e, 0.0) + c1 * c2
                if v == 0:
                    out.pop(e, None)
                else:
                    out[e] = v
        return MPoly(self.nvars, out)

    def truncate(self, kmax: int) -> "MPoly":
        return MPoly(self.nvars,
                     {e: c for e, c in self.terms.items() if sum(e) <= kmax})

    def chop(self, tol: float) -> "MPoly":
        return MPoly(self.nvars,
                     {e: c for e, c in self.terms.items() if abs(c) > tol})

    def diff(self, i: int) -> "MPoly":
        out: dict = {}
        for e, c in self.terms.items():
            if e[i] == 0:
                continue
            de = list(e)
            de[i] -= 1
            out[tuple(de)] = c * e[i]
        return MPoly(self.nvars, out)

    def eval(self, point: np.ndarray) -> complex:
        point = np.asarray(point)
        total = 0.0 + 0.0j
        for e, c in self.terms.items():
            v = c
            for i, p in enumerate(e):
                if p:
                    v *= point[i] ** p
            total += v
        return total

    def compose(self, args: list["MPoly"], kmax: int) -> "MPoly":
        """Substitute variable i -> args[i], truncated at degree kmax.

        Exploits the minimum order of each argument to skip monomials that
        cannot contribute below the truncation degree.
        """
        if not args:
            raise ValueError("compose needs one argument per variable")
        nv = args[0].nvars
        orders = [a.min_order() for a in args]
        out = MPoly(nv)
        pow_cache: dict[tuple[int, int], MPoly] = {}

        def power(i: int, p: int) -> MPoly:
            if p == 0:
                return MPoly.const(nv, 1.0)
            key = (i, p)
            if key not in pow_cache:
                pow_cache[key] = power(i, p - 1).mul(args[i], kmax)
            return pow_cache[key]

        for e, c in self.terms.items():
            lower = sum(p * orders[i] for i, p in enumerate(e) if p)
            if lower > kmax:
                continue
            term = MPoly.const(nv, c)
            for i, p in enumerate(e):
                if p:
                    term = term.mul(power(i, p), kmax)
            out.iadd(term)
        return out


# -- vector helpers ---------------------------------------------------

def poly_lincomb(matrix: np.ndarray, polys: list[MPoly],
                 nvars: int | None = None) -> list[MPoly]:
    """Rows of matrix applied to a vector of polynomials."""
    if not polys:
        return [MPoly(nvars or 0) for _ in range(np.asarray(matrix).shape[0])]
    nv = polys[0].nvars
    out = []
    for row in np.asarray(matrix):
        acc = MPoly(nv)
        for c, p in zip(row, polys):
            if c != 0 and p.terms:
                acc.iadd(p, complex(c))
        out.append(acc)
    return out


def compose_taylor(tensors: dict[int, np.ndarray], args: list[MPoly],
                   kmax: int) -> list[MPoly]:
    """Evaluate a Taylor series given by symmetric derivative tensors.

    tensors[o] has shape (m, n, ..., n) with o trailing axes: the o-th
    derivative of a map R^n -> R^m at the expansion point.  args must have
    zero constant term.  Returns sum_o (1/o!) T_o[args, ..., args] per
    output component, truncated at total degree kmax.
    """
    if not tensors:
        raise ValueError("need at least the first-order tensor")
    some = next(iter(tensors.values()))
    m = some.shape[0]
    n = len(args)
    nv = args[0].nvars
    out = [MPoly(nv) for _ in range(m)]
    prod_cache: dict[tuple, MPoly] = {}

    def arg_product(idx: tuple) -> MPoly:
        if idx not in prod_cache:
            if len(idx) == 1:
                prod_cache[idx] = args[idx[0]].copy()
            else:
                prod_cache[idx] = arg_product(idx[:-1]).mul(args[idx[-1]], kmax)
        return prod_cache[idx]

    for o, T in sorted(tensors.items()):
        if o == 0:
            continue
        scale = 1.0 / factorial(o)
        for idx in combinations_with_replacement(range(n), o):
            # multiplicity of the multiset among all n^o index tuples
            counts = [idx.count(j) for j in set(idx)]
            mult = factorial(o) // prod(factorial(c) for c in counts)
            prod_poly = arg_product(idx)
            if prod_poly.is_zero():
                continue
            for i in range(m):
                c = T[(i,) + idx]
                if c != 0:
                    out[i].iadd(prod_poly, scale * mult * c)
    return out
