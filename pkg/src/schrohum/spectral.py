"""Dirichlet sine basis on an interval and CF-weighted evolution of averaged states.

In the eigenbasis the averaged adjoint started from ``z0`` is diagonal:
mode ``n`` is multiplied by ``phi(lambda_n t)``.  Nothing here samples the
law, so the only errors are truncation and time quadrature; this module is
the reference against which the Monte Carlo finite-difference path is
checked.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import fft

from .backend import AdjointTrajectory, AveragedBackend, UnsupportedConfigurationError
from .grids import SpatialGrid, TimeGrid

__all__ = [
    "EigenBasis",
    "AliasingError",
    "dirichlet_eigenpairs",
    "project",
    "synthesize",
    "averaged_adjoint_evolve",
    "averaged_free_state",
    "spectral_gramian_apply",
    "gramian_mode_factors",
    "single_realization_terminal",
    "SpectralBackend",
]


class AliasingError(ValueError):
    """More modes requested than the grid can represent."""


@dataclass(frozen=True)
class EigenBasis:
    """``lambda_n = ((n+1) pi / L)^2``, ``e_n(x) = sqrt(2/L) sin((n+1) pi x / L)``, n = 0..N_modes-1."""

    L: float
    n_modes: int

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("L must be > 0")
        if self.n_modes < 1:
            raise ValueError("n_modes must be >= 1")

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        return np.arange(1, self.n_modes + 1) * np.pi / self.L

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return self.wavenumbers**2

    def eigenfunctions(self, x) -> np.ndarray:
        """Matrix ``E[n, j] = e_n(x_j)``."""
        x = np.asarray(x, dtype=float)
        return np.sqrt(2.0 / self.L) * np.sin(np.outer(self.wavenumbers, x))


def dirichlet_eigenpairs(L: float, n_modes: int) -> EigenBasis:
    return EigenBasis(float(L), int(n_modes))


def _check(basis: EigenBasis, grid: SpatialGrid) -> None:
    if not np.isclose(basis.L, grid.L, rtol=1e-14, atol=0.0):
        raise ValueError(f"basis length {basis.L} does not match grid length {grid.L}")
    if basis.n_modes >= grid.Nx:
        raise AliasingError(f"n_modes={basis.n_modes} aliases on a grid with Nx={grid.Nx} (need n_modes <= Nx-1)")


def project(field, basis: EigenBasis, grid: SpatialGrid) -> np.ndarray:
    """Fourier coefficients ``<f, e_n>_h`` with the grid (trapezoid) product, over the last axis.

    The DST-I is orthogonal on the interior nodes, so this inverts
    :func:`synthesize` exactly for ``n_modes <= Nx - 1``.
    """
    _check(basis, grid)
    f = np.asarray(field)
    y = fft.dst(f, type=1, axis=-1)
    return (0.5 * grid.dx * np.sqrt(2.0 / grid.L)) * y[..., : basis.n_modes]


def synthesize(coeffs, basis: EigenBasis, grid: SpatialGrid) -> np.ndarray:
    """Grid values of ``sum_n c_n e_n`` on the interior nodes."""
    _check(basis, grid)
    c = np.asarray(coeffs)
    pad = [(0, 0)] * (c.ndim - 1) + [(0, grid.n - basis.n_modes)]
    c = np.pad(c, pad)
    return (0.5 * np.sqrt(2.0 / grid.L)) * fft.dst(c, type=1, axis=-1)


def averaged_adjoint_evolve(coeffs, spec, basis: EigenBasis, t: float) -> np.ndarray:
    """Coefficients ``c_n phi(lambda_n t)`` of the averaged time-reversed adjoint.

    For the terminal-value adjoint observed at time ``t`` pass ``T - t``.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    return np.asarray(coeffs) * spec.cf(basis.eigenvalues * t)


def averaged_free_state(coeffs, spec, basis: EigenBasis, t: float) -> np.ndarray:
    """Coefficients ``c_n conj(phi(lambda_n t))`` of the uncontrolled averaged state."""
    if t < 0:
        raise ValueError("t must be >= 0")
    return np.asarray(coeffs) * np.conj(spec.cf(basis.eigenvalues * t))


def gramian_mode_factors(spec, basis: EigenBasis, T: float, n_quad: int = 512) -> np.ndarray:
    """``int_0^T |phi(lambda_n s)|^2 ds`` per mode, Gauss-Legendre with ``n_quad`` nodes."""
    nodes, weights = np.polynomial.legendre.leggauss(n_quad)
    s = 0.5 * T * (nodes + 1.0)
    w = 0.5 * T * weights
    phi = spec.cf(np.outer(basis.eigenvalues, s))
    return (np.abs(phi) ** 2) @ w


def spectral_gramian_apply(coeffs, spec, basis: EigenBasis, T: float, n_quad: int = 512, grid: SpatialGrid | None = None) -> np.ndarray:
    """Gramian in mode space when the control acts on the whole domain.

    Modes decouple there: ``(Lambda c)_n = c_n int_0^T |phi(lambda_n (T - s))|^2 ds``.
    """
    if grid is not None and not grid.full_control:
        raise UnsupportedConfigurationError("spectral Gramian factors require the control region to be the whole domain")
    return np.asarray(coeffs) * gramian_mode_factors(spec, basis, T, n_quad)


def single_realization_terminal(xi, y0_coeffs, control_coeffs, basis: EigenBasis, time: TimeGrid) -> np.ndarray:
    """Exact modal solution at ``T`` for fixed diffusivities ``xi``.

    ``control_coeffs[n-1]`` holds the coefficients of ``1_{G0} u^n`` and is
    applied over ``[t_{n-1}, t_n]`` with left-endpoint weight ``dt``, the
    same rule the averaged backends use.  Returns shape ``(len(xi), n_modes)``.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    lam = basis.eigenvalues
    y0 = np.asarray(y0_coeffs)
    f = np.asarray(control_coeffs)
    out = np.exp(-1j * np.outer(xi, lam) * time.T) * y0
    if f.size:
        lags = time.T - time.t[:-1]  # (Nt,)
        # sum_k exp(-i xi lam lag_k) f[k, n]
        phase = np.exp(-1j * xi[:, None, None] * lags[None, :, None] * lam[None, None, :])
        out = out + time.dt * np.einsum("xkn,kn->xn", phase, f)
    return out


class SpectralBackend(AveragedBackend):
    """Averaged dynamics from exact CF multipliers on the sine basis.

    Masking to the control region is done on the grid nodes, so the
    resulting Gramian is the same Hermitian form as the finite-difference
    one with the expectation taken exactly and time evolved without
    discretization error.
    """

    def __init__(self, spec, grid: SpatialGrid, time: TimeGrid, n_modes: int | None = None):
        self.spec = spec
        self.grid = grid
        self.time = time
        self.basis = EigenBasis(grid.L, n_modes or grid.n)
        _check(self.basis, grid)
        lam = self.basis.eigenvalues
        # phi(lambda_m * tau_k) for tau_k = t_k, k = 0..Nt
        self._phi = spec.cf(np.outer(time.t, lam))

    def project(self, f):
        return project(f, self.basis, self.grid)

    def synthesize(self, c):
        return synthesize(c, self.basis, self.grid)

    def adjoint(self, z_T) -> AdjointTrajectory:
        c = self.project(z_T)
        # level n sits at time t_n, i.e. lag T - t_n = t_{Nt-n}
        levels = self.synthesize(self._phi[::-1] * c)
        return AdjointTrajectory(levels, levels[:-1].copy())

    def _source_coeffs(self, u):
        return self.project(self.grid.mask * np.asarray(u)[1:])

    def forward(self, y0, u=None) -> np.ndarray:
        Nt = self.time.Nt
        c0 = self.project(y0)
        coeffs = np.conj(self._phi) * c0
        if u is not None:
            f = self._source_coeffs(u)  # f[k-1] drives [t_{k-1}, t_k]
            for n in range(1, Nt + 1):
                # lag t_n - t_{k-1} = t_{n-k+1}, k = 1..n
                lag_phi = np.conj(self._phi[n:0:-1])
                coeffs[n] += self.time.dt * np.sum(lag_phi * f[:n], axis=0)
        return self.synthesize(coeffs)

    def forward_terminal(self, y0, u=None) -> np.ndarray:
        Nt = self.time.Nt
        c = np.conj(self._phi[Nt]) * self.project(y0)
        if u is not None:
            f = self._source_coeffs(u)
            c = c + self.time.dt * np.sum(np.conj(self._phi[Nt:0:-1]) * f, axis=0)
        return self.synthesize(c)
