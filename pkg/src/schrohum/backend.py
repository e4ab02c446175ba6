"""Common surface of the averaged-dynamics evaluators used by the HUM layer.

A backend evaluates expectations over the diffusivity law of the forward
state and of the adjoint state.  Two implementations exist: the Monte Carlo
finite-difference ensemble (:class:`schrohum.averaging.MonteCarloBackend`)
and the characteristic-function evaluator
(:class:`schrohum.spectral.SpectralBackend`).

Time staggering shared by both: the control value ``u^n`` (``n = 1..Nt``)
drives the step ``t_{n-1} -> t_n``.  The adjoint quantity it pairs with in
the discrete duality identity is ``sources[n-1]``; for backward Euler that
is the adjoint at level ``n-1``.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import NamedTuple

import numpy as np

from .grids import SpatialGrid, TimeGrid


class AdjointTrajectory(NamedTuple):
    levels: np.ndarray  # (Nt+1, n); levels[Nt] is the terminal datum
    sources: np.ndarray  # (Nt, n); sources[n-1] pairs with control level n


class UnsupportedConfigurationError(ValueError):
    pass


class AveragedBackend(ABC):
    grid: SpatialGrid
    time: TimeGrid

    @abstractmethod
    def forward(self, y0, u=None) -> np.ndarray:
        """Averaged forward trajectory, shape (Nt+1, n)."""

    @abstractmethod
    def forward_terminal(self, y0, u=None) -> np.ndarray:
        """Averaged forward state at ``t = T``."""

    @abstractmethod
    def adjoint(self, z_T) -> AdjointTrajectory:
        """Averaged adjoint trajectory started from ``z_T`` at ``t = T``."""

    def free_terminal(self, y0) -> np.ndarray:
        return self.forward_terminal(y0, None)

    def control_from_adjoint(self, adj: AdjointTrajectory) -> np.ndarray:
        """Mask the averaged adjoint to the control region: ``u = 1_{G0} E(z)``.

        Level 0 is filled with the masked adjoint at ``t = 0`` for display;
        it is never used by the dynamics or the space-time products.
        """
        m = self.grid.mask
        u = np.empty((self.time.Nt + 1, self.grid.n), dtype=complex)
        u[1:] = m * adj.sources
        u[0] = m * adj.levels[0]
        return u

    def gramian(self, z_T) -> np.ndarray:
        """``Lambda z_T``: terminal averaged state from rest driven by the masked averaged adjoint."""
        u = self.control_from_adjoint(self.adjoint(z_T))
        return self.forward_terminal(np.zeros(self.grid.n, dtype=complex), u)

    def inner(self, a, b) -> complex:
        return complex(self.grid.inner(a, b))

    def norm(self, a) -> float:
        return float(self.grid.norm(a))
