"""Hilbert Uniqueness Method for averaged null control.

The minimal-norm control is ``u = 1_{G0} E(z(.; z_T*))`` where ``z_T*``
minimizes

    J(z_T) = 1/2 ||1_{G0} E(z(.; z_T))||^2_{L2(0,T; L2)} + Re <y0, E(z(0; z_T))>,

equivalently solves ``Lambda z_T = -E(y(T; y0; 0))``.  The complex state
space is treated as a real inner-product space (``Re <., .>_h``), which
keeps every CG coefficient real.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .backend import AveragedBackend
from .grids import SpatialGrid, TimeGrid, space_time_norm

__all__ = [
    "HumConfig",
    "HumResult",
    "NotPositiveError",
    "StagnationWarning",
    "cost_functional",
    "gramian_apply",
    "extract_control",
    "cg_solve",
]

log = logging.getLogger(__name__)


class NotPositiveError(ArithmeticError):
    """``<Lambda p, p>`` came out non-positive: the Gramian is not PSD as evaluated."""


class StagnationWarning(RuntimeWarning):
    pass


@dataclass
class HumConfig:
    tol: float = 1e-5
    k_max: int = 100
    z_guess: np.ndarray | None = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")


@dataclass
class HumResult:
    z_T_opt: np.ndarray
    control: np.ndarray
    residual_trace: list[float]
    iterations: int
    terminal_error: float
    terminal_max_modulus: float
    control_norm: float
    converged: bool
    controlled: np.ndarray = field(repr=False)

    def summary(self) -> dict:
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "final_residual": self.residual_trace[-1],
            "terminal_error": self.terminal_error,
            "terminal_max_modulus": self.terminal_max_modulus,
            "control_norm": self.control_norm,
        }


def gramian_apply(z_T, backend: AveragedBackend) -> np.ndarray:
    return backend.gramian(z_T)


def extract_control(adjoint, backend: AveragedBackend) -> np.ndarray:
    """Control field ``1_{G0} E(z)`` on the time grid, shape (Nt+1, n)."""
    return backend.control_from_adjoint(adjoint)


def cost_functional(z_T, backend: AveragedBackend, y0) -> float:
    adj = backend.adjoint(z_T)
    u = backend.control_from_adjoint(adj)
    quad = space_time_norm(u, backend.grid, backend.time) ** 2
    return 0.5 * quad + backend.inner(y0, adj.levels[0]).real


def _rdot(backend: AveragedBackend, a, b) -> float:
    return backend.inner(a, b).real


def cg_solve(y0, backend: AveragedBackend, config: HumConfig | None = None) -> HumResult:
    """Conjugate gradients on ``Lambda z = -E(y(T; y0; 0))``.

    The backend (and so its sample set) is fixed for the whole run; every
    Gramian application sees the same linear operator.
    """
    config = config or HumConfig()
    grid: SpatialGrid = backend.grid
    time: TimeGrid = backend.time
    y0 = np.asarray(y0, dtype=complex)
    z = np.zeros(grid.n, dtype=complex) if config.z_guess is None else np.array(config.z_guess, dtype=complex)

    rhs = -backend.free_terminal(y0)
    r = rhs - backend.gramian(z) if np.any(z) else rhs.copy()
    p = r.copy()
    rr = _rdot(backend, r, r)
    trace = [math.sqrt(rr)]
    k = 0
    stalled = 0
    while trace[-1] > config.tol and k < config.k_max:
        Ap = backend.gramian(p)
        pAp = _rdot(backend, Ap, p)
        if pAp <= 1e-13 * backend.norm(Ap) * backend.norm(p):
            raise NotPositiveError(f"<Lambda p, p> = {pAp:.3e} at iteration {k}; Gramian not positive on this backend")
        a = rr / pAp
        z = z + a * p
        r = r - a * Ap
        rr_new = _rdot(backend, r, r)
        trace.append(math.sqrt(rr_new))
        k += 1
        if trace[-1] <= config.tol:
            break
        b = rr_new / rr
        stalled = stalled + 1 if b >= 1.0 else 0
        if stalled == 5:
            warnings.warn(f"CG stagnating: b_k >= 1 for 5 consecutive steps (iteration {k})", StagnationWarning, stacklevel=2)
        p = r + b * p
        rr = rr_new
    log.debug("cg finished after %d iterations, residual %.3e", k, trace[-1])

    adj = backend.adjoint(z)
    u = backend.control_from_adjoint(adj)
    controlled = backend.forward(y0, u)
    terminal = controlled[-1]
    return HumResult(
        z_T_opt=z,
        control=u,
        residual_trace=trace,
        iterations=k,
        terminal_error=backend.norm(terminal),
        terminal_max_modulus=float(np.max(np.abs(terminal))),
        control_norm=space_time_norm(u, grid, time),
        converged=trace[-1] <= config.tol,
        controlled=controlled,
    )
