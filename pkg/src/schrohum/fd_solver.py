"""Implicit finite differences for one realization ``y_t - i xi y_xx = 1_{G0} u``.

All routines accept a batch of diffusivities ``xi`` (shape ``(B,)``) and
carry states of shape ``(B, n)``, so an ensemble is propagated with one
sweep per time step.  The adjoint is the exact conjugate transpose of the
discrete forward propagator ("discretize, then optimize"), which makes the
discrete duality identity hold to round-off.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .backend import AdjointTrajectory
from .grids import SpatialGrid, TimeGrid

__all__ = [
    "Scheme",
    "ThomasBreakdown",
    "thomas_solve",
    "TridiagonalFactor",
    "second_difference_apply",
    "Propagator",
    "forward_solve",
    "adjoint_solve_discrete",
]


class ThomasBreakdown(ArithmeticError):
    def __init__(self, message: str, batch_index: int | None = None):
        super().__init__(message)
        self.batch_index = batch_index


class Scheme(str, Enum):
    BACKWARD_EULER = "backward_euler"
    CRANK_NICOLSON = "crank_nicolson"


class TridiagonalFactor:
    """LU factorization of a batch of tridiagonal matrices, reused across right-hand sides.

    ``lower[..., i]`` is ``A[i+1, i]``, ``upper[..., i]`` is ``A[i, i+1]``.
    """

    def __init__(self, lower, diag, upper):
        diag = np.asarray(diag)
        lower = np.broadcast_to(lower, diag.shape[:-1] + (diag.shape[-1] - 1,))
        upper = np.broadcast_to(upper, lower.shape)
        n = diag.shape[-1]
        dtype = np.result_type(lower, diag, upper, np.float64)
        self.n = n
        self.lower = np.array(lower, dtype=dtype)
        self.inv_pivot = np.empty(diag.shape, dtype=dtype)
        self.cprime = np.empty(lower.shape, dtype=dtype)
        scale = np.max(np.abs(diag), axis=-1) + np.finfo(float).tiny
        pivot = diag[..., 0].astype(dtype)
        for i in range(n):
            if i:
                pivot = diag[..., i] - self.lower[..., i - 1] * self.cprime[..., i - 1]
            small = np.abs(pivot) <= 1e-14 * scale
            if np.any(small):
                bad = int(np.flatnonzero(np.ravel(small))[0])
                raise ThomasBreakdown(f"zero pivot in row {i} of tridiagonal system {bad}", bad)
            self.inv_pivot[..., i] = 1.0 / pivot
            if i < n - 1:
                self.cprime[..., i] = upper[..., i] * self.inv_pivot[..., i]

    def solve(self, rhs) -> np.ndarray:
        d = np.array(rhs, dtype=np.result_type(rhs, self.inv_pivot))
        n = self.n
        lower, inv_pivot, cprime = self.lower, self.inv_pivot, self.cprime
        d[..., 0] *= inv_pivot[..., 0]
        for i in range(1, n):
            d[..., i] = (d[..., i] - lower[..., i - 1] * d[..., i - 1]) * inv_pivot[..., i]
        for i in range(n - 2, -1, -1):
            d[..., i] -= cprime[..., i] * d[..., i + 1]
        return d


def thomas_solve(diag, off_diag, rhs, upper=None) -> np.ndarray:
    """Solve a tridiagonal system by Thomas elimination, O(n) per system.

    With ``upper`` omitted the matrix is symmetric: ``off_diag`` is used for
    both the sub- and super-diagonal.  Leading axes are batch axes.
    """
    upper = off_diag if upper is None else upper
    return TridiagonalFactor(off_diag, diag, upper).solve(rhs)


def second_difference_apply(v, grid: SpatialGrid) -> np.ndarray:
    """``(v_{j+1} - 2 v_j + v_{j-1}) / dx^2`` with zero Dirichlet values at both ends."""
    v = np.asarray(v)
    out = -2.0 * v
    out[..., 1:] += v[..., :-1]
    out[..., :-1] += v[..., 1:]
    return out / grid.dx**2


class Propagator:
    """One-step operators of the implicit scheme for a batch of diffusivities.

    Backward Euler:   ``(I - i xi dt D2) y^{n+1} = y^n + dt m u^{n+1}``
    Crank-Nicolson:   ``(I - i xi dt/2 D2) y^{n+1} = (I + i xi dt/2 D2) y^n + dt m u^{n+1}``
    """

    def __init__(self, xi, grid: SpatialGrid, time: TimeGrid, scheme: Scheme | str = Scheme.BACKWARD_EULER):
        self.xi = np.atleast_1d(np.asarray(xi, dtype=float))
        self.grid = grid
        self.time = time
        self.scheme = Scheme(scheme)
        theta = 1.0 if self.scheme is Scheme.BACKWARD_EULER else 0.5
        n = grid.n
        # a = i xi theta dt / dx^2; A = I - a D2 dx^2
        a = 1j * self.xi * theta * time.dt / grid.dx**2
        diag = np.broadcast_to((1.0 + 2.0 * a)[:, None], (self.xi.size, n))
        off = np.broadcast_to((-a)[:, None], (self.xi.size, n - 1))
        self._a = a
        self.implicit = TridiagonalFactor(off, diag, off)
        self.implicit_h = TridiagonalFactor(np.conj(off), np.conj(diag), np.conj(off))

    def _explicit(self, y, conj: bool = False):
        # B y = (I + i xi dt/2 D2) y, Crank-Nicolson only
        a = np.conj(self._a) if conj else self._a
        d2 = second_difference_apply(y, self.grid) * self.grid.dx**2
        return y + a[:, None] * d2

    def step(self, y, source=None):
        """Advance ``y`` (shape (B, n)) one step; ``source`` is ``m * u^{n+1}``."""
        rhs = y if self.scheme is Scheme.BACKWARD_EULER else self._explicit(y)
        if source is not None:
            rhs = rhs + self.time.dt * source
        return self.implicit.solve(rhs)

    def adjoint_step(self, w):
        """``W^n = B^H A^{-H} W^{n+1}``; returns ``(W^n, A^{-H} W^{n+1})``."""
        v = self.implicit_h.solve(w)
        if self.scheme is Scheme.BACKWARD_EULER:
            return v, v
        return self._explicit(v, conj=True), v

    def forward(self, y0, u=None, keep: bool = True):
        """Trajectory ``(Nt+1, B, n)`` if ``keep`` else the terminal state ``(B, n)``."""
        Nt = self.time.Nt
        y = np.broadcast_to(np.asarray(y0, dtype=complex), (self.xi.size, self.grid.n)).copy()
        traj = np.empty((Nt + 1,) + y.shape, dtype=complex) if keep else None
        if keep:
            traj[0] = y
        m = self.grid.mask
        for n in range(Nt):
            src = None if u is None else m * np.asarray(u)[n + 1]
            y = self.step(y, src)
            if keep:
                traj[n + 1] = y
        return traj if keep else y

    def adjoint(self, z_T):
        """Adjoint levels ``(Nt+1, B, n)`` and control-aligned sources ``(Nt, B, n)``."""
        Nt = self.time.Nt
        w = np.broadcast_to(np.asarray(z_T, dtype=complex), (self.xi.size, self.grid.n)).copy()
        levels = np.empty((Nt + 1,) + w.shape, dtype=complex)
        sources = np.empty((Nt,) + w.shape, dtype=complex)
        levels[Nt] = w
        for n in range(Nt - 1, -1, -1):
            w, src = self.adjoint_step(w)
            levels[n] = w
            sources[n] = src
        return levels, sources


def forward_solve(xi: float, y0, u, grid: SpatialGrid, time: TimeGrid, scheme: Scheme | str = Scheme.BACKWARD_EULER) -> np.ndarray:
    """All time levels ``(Nt+1, n)`` of one realization; ``u`` of shape (Nt+1, n) or ``None``."""
    return Propagator([xi], grid, time, scheme).forward(y0, u)[:, 0]


def adjoint_solve_discrete(xi: float, z_T, grid: SpatialGrid, time: TimeGrid, scheme: Scheme | str = Scheme.BACKWARD_EULER) -> AdjointTrajectory:
    """Discrete adjoint of :func:`forward_solve` from terminal datum ``z_T``.

    ``levels[Nt] = z_T``.  The duality identity reads
    ``<y^Nt, z_T>_h - <y0, levels[0]>_h = dt sum_n <m u^n, sources[n-1]>_h``.
    """
    levels, sources = Propagator([xi], grid, time, scheme).adjoint(z_T)
    return AdjointTrajectory(levels[:, 0], sources[:, 0])
