"""Ensemble averages of finite-difference trajectories over diffusivity samples.

The estimator is ``E_M[f] = sum_k w_k f(alpha_k)`` with ``w_k = 1/M`` for a
Monte Carlo ensemble; deterministic quadrature ensembles (weighted nodes)
reuse the same machinery.

For Cauchy diffusivities the law has no mean, yet every realization
satisfies ``||y(t; xi)|| <= ||y0|| + sqrt(T) ||u||`` uniformly in ``xi``
(each discrete mode is damped by a factor of modulus <= 1), so the sample
mean of states is always well defined.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .backend import AdjointTrajectory, AveragedBackend
from .distributions import DistributionSpec, Family, sample_block
from .fd_solver import Propagator, Scheme, ThomasBreakdown
from .grids import SpatialGrid, TimeGrid

__all__ = [
    "Ensemble",
    "EnsembleSolveError",
    "pairwise_sum",
    "MonteCarloBackend",
    "mc_average_forward",
    "mc_average_adjoint",
    "mc_error_bound",
]

CHUNK = 64


class EnsembleSolveError(ArithmeticError):
    def __init__(self, message: str, sample_index: int):
        super().__init__(message)
        self.sample_index = sample_index


def pairwise_sum(a, axis: int = 0):
    """Cascade summation along ``axis``; result does not depend on how the input was produced."""
    a = np.moveaxis(np.asarray(a), axis, 0)
    n = a.shape[0]
    if n <= 8:
        acc = a[0].copy()
        for i in range(1, n):
            acc += a[i]
        return acc
    h = n // 2
    return pairwise_sum(a[:h]) + pairwise_sum(a[h:])


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Diffusivity nodes with weights summing to one.

    A Monte Carlo ensemble holds samples ``1..M`` of the counter-based stream
    keyed by ``seed``; sample ``k`` does not depend on ``M``.
    """

    spec: DistributionSpec | None
    samples: np.ndarray
    weights: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float).ravel()
        weights = np.array(self.weights, dtype=float).ravel()
        if samples.size < 1:
            raise ValueError("an ensemble needs at least one node")
        if weights.shape != samples.shape:
            raise ValueError("samples and weights differ in length")
        samples.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "weights", weights)

    @property
    def M(self) -> int:
        return self.samples.size

    @classmethod
    def draw(cls, spec: DistributionSpec, M: int, seed: int) -> "Ensemble":
        if M < 1:
            raise ValueError("M must be >= 1")
        return cls(spec, sample_block(spec, seed, 0, M), np.full(M, 1.0 / M), int(seed))

    @classmethod
    def gauss_hermite(cls, spec: DistributionSpec, n: int) -> "Ensemble":
        """Deterministic quadrature ensemble for a normal law (no sampling error)."""
        if spec.family is not Family.NORMAL:
            raise ValueError("Gauss-Hermite ensembles need a normal law")
        x, w = np.polynomial.hermite.hermgauss(n)
        nodes = spec["mean"] + math.sqrt(2.0 * spec["variance"]) * x
        return cls(spec, nodes, w / math.sqrt(math.pi))

    @classmethod
    def point(cls, xi: float) -> "Ensemble":
        return cls(None, [xi], [1.0])


class MonteCarloBackend(AveragedBackend):
    """Ensemble-averaged finite-difference dynamics with a frozen sample set.

    Samples are processed in fixed chunks of ``CHUNK`` nodes; chunk partial
    sums are combined in a fixed pairwise order, so results are bit-identical
    for any ``threads``.  ``same_level_adjoint`` pairs the control at level ``n``
    with the adjoint at the same level instead of the exact discrete adjoint
    source; the resulting Gramian is no longer Hermitian.
    """

    def __init__(
        self,
        ensemble: Ensemble,
        grid: SpatialGrid,
        time: TimeGrid,
        scheme: Scheme | str = Scheme.BACKWARD_EULER,
        threads: int = 1,
        same_level_adjoint: bool = False,
    ):
        self.ensemble = ensemble
        self.grid = grid
        self.time = time
        self.scheme = Scheme(scheme)
        self.threads = max(1, int(threads))
        self.same_level_adjoint = same_level_adjoint
        self._chunks = []
        xi = ensemble.samples
        for start in range(0, xi.size, CHUNK):
            stop = min(start + CHUNK, xi.size)
            try:
                prop = Propagator(xi[start:stop], grid, time, self.scheme)
            except ThomasBreakdown as exc:
                k = start + (exc.batch_index or 0)
                raise EnsembleSolveError(f"sample {k + 1} (alpha={xi[k]:.17g}): {exc}", k + 1) from exc
            self._chunks.append((prop, ensemble.weights[start:stop, None]))

    def _map(self, fn):
        if self.threads == 1 or len(self._chunks) == 1:
            parts = [fn(c) for c in self._chunks]
        else:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                parts = list(pool.map(fn, self._chunks))
        return pairwise_sum(np.stack(parts))

    def _forward_chunk(self, chunk, y0, u, keep):
        prop, w = chunk
        Nt = self.time.Nt
        y = np.broadcast_to(np.asarray(y0, dtype=complex), (w.shape[0], self.grid.n)).copy()
        out = np.empty((Nt + 1, self.grid.n), dtype=complex) if keep else None
        if keep:
            out[0] = pairwise_sum(w * y)
        m = self.grid.mask
        for n in range(Nt):
            y = prop.step(y, None if u is None else m * u[n + 1])
            if keep:
                out[n + 1] = pairwise_sum(w * y)
        return out if keep else pairwise_sum(w * y)

    def _adjoint_chunk(self, chunk, z_T):
        prop, w = chunk
        Nt = self.time.Nt
        z = np.broadcast_to(np.asarray(z_T, dtype=complex), (w.shape[0], self.grid.n)).copy()
        out = np.empty((2 * Nt + 1, self.grid.n), dtype=complex)
        out[Nt] = pairwise_sum(w * z)
        for n in range(Nt - 1, -1, -1):
            z, src = prop.adjoint_step(z)
            out[n] = pairwise_sum(w * z)
            out[Nt + 1 + n] = out[n] if src is z else pairwise_sum(w * src)
        return out

    def forward(self, y0, u=None) -> np.ndarray:
        u = None if u is None else np.asarray(u)
        return self._map(lambda c: self._forward_chunk(c, y0, u, True))

    def forward_terminal(self, y0, u=None) -> np.ndarray:
        u = None if u is None else np.asarray(u)
        return self._map(lambda c: self._forward_chunk(c, y0, u, False))

    def adjoint(self, z_T) -> AdjointTrajectory:
        Nt = self.time.Nt
        both = self._map(lambda c: self._adjoint_chunk(c, z_T))
        levels = both[: Nt + 1]
        sources = levels[1:].copy() if self.same_level_adjoint else both[Nt + 1 :]
        return AdjointTrajectory(levels, sources)


def mc_average_forward(ens: Ensemble, y0, u, grid: SpatialGrid, time: TimeGrid, scheme=Scheme.BACKWARD_EULER, threads: int = 1) -> np.ndarray:
    """``sum_k w_k y(t_n; alpha_k; y0; u)`` at every level, shape (Nt+1, n)."""
    return MonteCarloBackend(ens, grid, time, scheme, threads).forward(y0, u)


def mc_average_adjoint(ens: Ensemble, z_T, grid: SpatialGrid, time: TimeGrid, scheme=Scheme.BACKWARD_EULER, threads: int = 1) -> AdjointTrajectory:
    return MonteCarloBackend(ens, grid, time, scheme, threads).adjoint(z_T)


def mc_error_bound(trajectory_norm: float, M: int) -> float:
    """Root-mean-square error bound ``||y||_{L2(Omega; L2)} / sqrt(M)`` of the sample mean."""
    if M < 1:
        raise ValueError("M must be >= 1")
    return trajectory_norm / math.sqrt(M)
