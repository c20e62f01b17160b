"""Forward integration of x'(t) = f(x_t) by the method of steps.

RK4 on a uniform grid with cubic-Hermite dense output for history lookups;
emitted states are re-sampled onto the collocation grid as segments.  Only
forward time is supported, matching the semiflow's uniqueness direction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import DelayModel, ModelError, df_eval, f_eval
from .segments import (GridSpec, Segment, differentiate, from_flat,
                       seg_eval, zero_segment)


class SemiflowError(RuntimeError):
    def __init__(self, msg, t_plus=None):
        super().__init__(msg)
        self.t_plus = t_plus


def xf_defect(m: DelayModel, phi: Segment) -> float:
    """Distance of phi from the solution manifold: |phi'(0) - f(phi)|."""
    d0 = seg_eval(differentiate(phi), 0.0)
    return float(np.max(np.abs(d0 - f_eval(m, phi))))


def project_to_xf(m: DelayModel, phi: Segment, z_basis: np.ndarray,
                  tol: float = 1e-12, max_iter: int = 25) -> Segment:
    """Correct phi along span(z_basis) until phi'(0) = f(phi).

    The complementary component P phi is untouched because the correction
    stays inside the transversal subspace Z.
    """
    grid = phi.grid
    z_segs = [from_flat(grid, z_basis[:, i]) for i in range(z_basis.shape[1])]
    cur = phi
    for _ in range(max_iter):
        res = seg_eval(differentiate(cur), 0.0) - f_eval(m, cur)
        if np.max(np.abs(res)) <= tol:
            return cur
        J = np.empty((grid.n, len(z_segs)))
        for j, zs in enumerate(z_segs):
            J[:, j] = (seg_eval(differentiate(zs), 0.0)
                       - df_eval(m, cur, zs))
        step = np.linalg.solve(J, -res)
        delta = z_basis @ step
        cur = from_flat(grid, cur.flat() + delta)
    raise SemiflowError(
        f"projection onto the solution manifold did not converge in "
        f"{max_iter} iterations (residual {np.max(np.abs(res)):.2e})")


@dataclass(frozen=True)
class Trajectory:
    t0: float
    times: np.ndarray
    segments: list
    t_plus: float
    defects: np.ndarray

    def segment_at(self, t: float) -> Segment:
        idx = np.flatnonzero(np.isclose(self.times, t, atol=1e-10))
        if idx.size == 0:
            if t > self.t_plus:
                raise SemiflowError(
                    f"time {t} beyond computed horizon {self.t_plus}",
                    t_plus=self.t_plus)
            raise SemiflowError(f"no stored segment at t={t}; stored times "
                                f"are multiples of the output step")
        return self.segments[int(idx[0])]

    def overlap_defect(self) -> float:
        """Max mismatch between consecutive segments on shared history."""
        worst = 0.0
        for (ta, sa), (tb, sb) in zip(zip(self.times, self.segments),
                                      zip(self.times[1:], self.segments[1:])):
            grid = sa.grid
            for theta in grid.nodes:
                shifted = theta + (ta - tb)
                if shifted < -grid.h:
                    continue
                diff = seg_eval(sb, shifted) - seg_eval(sa, theta)
                worst = max(worst, float(np.max(np.abs(diff))))
        return worst


def _hermite(x0, x1, d0, d1, s):
    s2, s3 = s * s, s * s * s
    return ((2 * s3 - 3 * s2 + 1) * x0 + (s3 - 2 * s2 + s) * d0
            + (-2 * s3 + 3 * s2) * x1 + (s3 - s2) * d1)


class _History:
    """Dense solution on [-h, T]: initial segment + Hermite knots at i*dt."""

    def __init__(self, m: DelayModel, phi: Segment, dt: float, nsteps: int):
        self.m = m
        self.phi = phi
        self.dt = dt
        self.x = np.empty((nsteps + 1, m.n))
        self.xd = np.empty((nsteps + 1, m.n))
        self.count = 0

    def push(self, x, xd):
        self.x[self.count] = x
        self.xd[self.count] = xd
        self.count += 1

    def eval(self, t: float) -> np.ndarray:
        if t <= 0.0:
            return np.atleast_1d(seg_eval(self.phi, max(t, -self.phi.grid.h)))
        i = min(int(t / self.dt), self.count - 2)
        i = max(i, 0)
        if self.count < 2:
            # query inside the very first step: extrapolate linearly
            return self.x[0] + t * self.xd[0]
        s = t / self.dt - i
        return _hermite(self.x[i], self.x[i + 1],
                        self.dt * self.xd[i], self.dt * self.xd[i + 1], s)


def integrate(m: DelayModel, phi: Segment, T: float, dt: float,
              out_dt: float | None = None, defect_tol: float = 1e-8,
              check_segments: bool = True) -> Trajectory:
    """Semiflow F(t, phi) for t in [0, T], emitted every out_dt.

    phi must lie on the solution manifold within defect_tol.  The step is
    adjusted so that T and out_dt are integer multiples of it.
    """
    if T <= 0:
        raise SemiflowError(f"duration must be positive, got {T}")
    d0 = xf_defect(m, phi)
    if d0 > defect_tol:
        raise SemiflowError(
            f"initial segment off the solution manifold: defect {d0:.2e} "
            f"> {defect_tol:.0e}")
    nsteps = max(1, int(np.ceil(T / dt - 1e-9)))
    dt = T / nsteps
    if out_dt is None:
        out_dt = T / min(50, nsteps)
    out_every = max(1, int(round(out_dt / dt)))

    hist = _History(m, phi, dt, nsteps)

    def rhs(t, x):
        rho = m.r(x)
        if rho < -1e-12:
            raise ModelError(f"advanced argument: r(x({t})) = {rho} < 0")
        if rho <= 1e-14:
            delayed = x
        else:
            delayed = hist.eval(t - rho)
        return m.g(delayed)

    x = np.atleast_1d(seg_eval(phi, 0.0))
    hist.push(x, rhs(0.0, x))

    grid = phi.grid
    out_times = [0.0]
    out_segments = [phi]
    defects = [d0]

    def emit(t):
        vals = np.empty((grid.N + 1, grid.n))
        for j, theta in enumerate(grid.nodes):
            vals[j] = hist.eval(t + theta)
        seg = Segment(grid, vals)
        out_times.append(t)
        out_segments.append(seg)
        defects.append(xf_defect(m, seg) if check_segments else np.nan)

    t = 0.0
    for step in range(nsteps):
        k1 = rhs(t, x)
        k2 = rhs(t + dt / 2, x + dt / 2 * k1)
        k3 = rhs(t + dt / 2, x + dt / 2 * k2)
        k4 = rhs(t + dt, x + dt * k3)
        x = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = (step + 1) * dt
        if not np.all(np.isfinite(x)):
            raise SemiflowError(
                f"solution blew up near t = {t:.6g}", t_plus=step * dt)
        hist.push(x, rhs(t, x))
        if (step + 1) % out_every == 0 or step == nsteps - 1:
            emit(t)

    return Trajectory(t0=0.0, times=np.array(out_times),
                      segments=out_segments, t_plus=T,
                      defects=np.array(defects))


def flow_map(m: DelayModel, phi: Segment, t: float, dt: float = 1e-3,
             **kw) -> Segment:
    """Time-t map F(t, .) of the semiflow."""
    if t == 0.0:
        return phi
    traj = integrate(m, phi, t, dt, out_dt=t, **kw)
    return traj.segments[-1]
