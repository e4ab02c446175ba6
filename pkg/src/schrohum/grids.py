"""Uniform space and time grids on ``G = (0, L)`` and ``[0, T]``."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class SpatialGrid:
    """Interior nodes ``x_j = j L / Nx``, ``j = 1 .. Nx-1``; Dirichlet endpoints excluded.

    ``control`` is the closed interval ``(x_lo, x_hi)`` standing for the
    control region; ``None`` means the whole domain.
    """

    L: float
    Nx: int
    control: tuple[float, float] | None = None

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("L must be > 0")
        if self.Nx < 2:
            raise ValueError("Nx must be >= 2")
        if self.control is not None:
            lo, hi = map(float, self.control)
            if not 0 <= lo < hi <= self.L:
                raise ValueError(f"control region must satisfy 0 <= x_lo < x_hi <= L, got {self.control}")
            object.__setattr__(self, "control", (lo, hi))
            if not self.mask.any():
                raise ValueError(f"control region {self.control} contains no grid node")

    @property
    def dx(self) -> float:
        return self.L / self.Nx

    @property
    def n(self) -> int:
        """Number of unknowns."""
        return self.Nx - 1

    @cached_property
    def x(self) -> np.ndarray:
        return np.arange(1, self.Nx) * self.L / self.Nx

    @cached_property
    def mask(self) -> np.ndarray:
        if self.control is None:
            return np.ones(self.n)
        lo, hi = self.control
        eps = 1e-12 * self.L
        return ((self.x >= lo - eps) & (self.x <= hi + eps)).astype(float)

    @property
    def full_control(self) -> bool:
        return bool(self.mask.all())

    def inner(self, a, b) -> complex:
        """Discrete Hermitian product ``dx * sum(a conj(b))`` over the last axis."""
        return self.dx * np.sum(np.asarray(a) * np.conj(b), axis=-1)

    def norm(self, a) -> float:
        a = np.asarray(a)
        return np.sqrt(self.dx * np.sum(np.abs(a) ** 2, axis=-1))

    def with_control(self, control: tuple[float, float] | None) -> "SpatialGrid":
        return SpatialGrid(self.L, self.Nx, control)


@dataclass(frozen=True)
class TimeGrid:
    T: float
    Nt: int

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be > 0")
        if self.Nt < 1:
            raise ValueError("Nt must be >= 1")

    @property
    def dt(self) -> float:
        return self.T / self.Nt

    @cached_property
    def t(self) -> np.ndarray:
        return np.arange(self.Nt + 1) * self.T / self.Nt


def space_time_norm(control, grid: SpatialGrid, time: TimeGrid) -> float:
    """``sqrt(dt * sum_{n>=1} ||u^n||_h^2)``; level 0 of a control never enters the dynamics."""
    u = np.asarray(control)
    return float(np.sqrt(time.dt * grid.dx * np.sum(np.abs(u[1:]) ** 2)))


def space_time_inner(a, b, grid: SpatialGrid, time: TimeGrid) -> complex:
    """``dt * sum_{n>=1} <a^n, b^n>_h`` over control levels 1..Nt."""
    return complex(time.dt * grid.dx * np.sum(np.asarray(a)[1:] * np.conj(np.asarray(b)[1:])))
