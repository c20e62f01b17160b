"""Discretized history space: polynomial segments on a Chebyshev-Lobatto grid.

A segment represents a function [-h, 0] -> R^n through its values at the
N+1 Chebyshev-Gauss-Lobatto nodes.  Node ordering is fixed: nodes[0] = 0,
nodes[N] = -h, strictly decreasing.  All matrices and flattened vectors
follow this ordering; a segment flattens row-major as index = node*n + comp.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class SegmentError(ValueError):
    pass


def _cheb_diff_matrix(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes x_k = cos(k pi / N) on [-1, 1] and the differentiation matrix.

    Standard Trefethen construction; exact (to roundoff) on polynomials of
    degree <= N sampled at the nodes.
    """
    k = np.arange(N + 1)
    x = np.cos(np.pi * k / N)
    c = np.hstack([2.0, np.ones(N - 1), 2.0]) * (-1.0) ** k
    X = np.tile(x, (N + 1, 1)).T
    dX = X - X.T
    D = np.outer(c, 1.0 / c) / (dX + np.eye(N + 1))
    D -= np.diag(D.sum(axis=1))
    return x, D


@dataclass(frozen=True)
class GridSpec:
    """Collocation grid for the history interval [-h, 0].

    nodes are the Chebyshev-Lobatto points mapped affinely to [-h, 0],
    ordered from 0 down to -h.  diff is d/dtheta on nodal values and
    bary_w the barycentric weights for interpolation.
    """

    h: float
    n: int
    N: int
    nodes: np.ndarray = field(repr=False)
    diff: np.ndarray = field(repr=False)
    bary_w: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        """Dimension of the flattened nodal representation."""
        return (self.N + 1) * self.n


def make_grid(h: float, n: int, N: int) -> GridSpec:
    if not h > 0:
        raise SegmentError(f"delay horizon must be positive, got h={h}")
    if n < 1:
        raise SegmentError(f"state dimension must be >= 1, got n={n}")
    if N < 4:
        raise SegmentError(f"collocation degree must be >= 4, got N={N}")
    x, D = _cheb_diff_matrix(N)
    nodes = (x - 1.0) * (h / 2.0)          # x=1 -> 0, x=-1 -> -h
    diff = D * (2.0 / h)                   # chain rule for the affine map
    k = np.arange(N + 1)
    bary = (-1.0) ** k
    bary[0] *= 0.5
    bary[-1] *= 0.5
    return GridSpec(h=float(h), n=int(n), N=int(N), nodes=nodes, diff=diff,
                    bary_w=bary)


def interp_weights(grid: GridSpec, theta: float) -> np.ndarray:
    """Row vector w with p(theta) = w @ values for any nodal values.

    Barycentric Lagrange interpolation; exact at the nodes.
    """
    if theta > 1e-12 or theta < -grid.h - 1e-12:
        raise SegmentError(
            f"evaluation point {theta} outside [-{grid.h}, 0]")
    theta = min(0.0, max(-grid.h, theta))
    d = theta - grid.nodes
    hit = np.abs(d) < 1e-14 * max(1.0, grid.h)
    if hit.any():
        w = np.zeros(grid.N + 1)
        w[np.argmax(hit)] = 1.0
        return w
    w = grid.bary_w / d
    return w / w.sum()


@dataclass(frozen=True)
class Segment:
    """Nodal values of a polynomial history function [-h, 0] -> R^n."""

    grid: GridSpec
    values: np.ndarray  # (N+1, n)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.N + 1, self.grid.n):
            raise SegmentError(
                f"values shape {v.shape} does not match grid "
                f"({self.grid.N + 1}, {self.grid.n})")
        if not np.all(np.isfinite(v)):
            raise SegmentError("segment values must be finite")
        object.__setattr__(self, "values", v)

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def __add__(self, other: "Segment") -> "Segment":
        return Segment(self.grid, self.values + other.values)

    def __sub__(self, other: "Segment") -> "Segment":
        return Segment(self.grid, self.values - other.values)

    def __mul__(self, a: float) -> "Segment":
        return Segment(self.grid, self.values * a)

    __rmul__ = __mul__


def from_flat(grid: GridSpec, vec: np.ndarray) -> Segment:
    return Segment(grid, np.asarray(vec, dtype=float).reshape(grid.N + 1, grid.n))


def from_function(grid: GridSpec, fun) -> Segment:
    """Sample a callable theta -> R^n (or scalar for n=1) at the nodes."""
    vals = np.array([np.atleast_1d(fun(t)) for t in grid.nodes], dtype=float)
    return Segment(grid, vals)


def zero_segment(grid: GridSpec) -> Segment:
    return Segment(grid, np.zeros((grid.N + 1, grid.n)))


def seg_eval(s: Segment, theta: float) -> np.ndarray:
    """Value of the interpolating polynomial at theta in [-h, 0]."""
    return interp_weights(s.grid, theta) @ s.values


def differentiate(s: Segment) -> Segment:
    """Nodal values of the derivative of the interpolant."""
    return Segment(s.grid, s.grid.diff @ s.values)


def norm_C(s: Segment) -> float:
    """Nodal discretization of sup norm, max-norm on R^n.

    This is a lower bound of the true sup norm of the interpolant; for
    smooth data on a fine grid the gap is below interpolation error.
    """
    if s.grid.n == 1:
        return float(np.max(np.abs(s.values)))
    return float(np.max(np.max(np.abs(s.values), axis=1)))


def norm_C1(s: Segment) -> float:
    return norm_C(s) + norm_C(differentiate(s))
