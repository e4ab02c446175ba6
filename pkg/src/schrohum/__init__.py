"""Averaged null control of the Schrodinger equation with a random diffusivity.

Submodules:

- :mod:`schrohum.distributions`: diffusivity laws, characteristic functions, samplers
- :mod:`schrohum.spectral`: sine-basis evaluator of exact averages
- :mod:`schrohum.fd_solver`: implicit finite differences and the discrete adjoint
- :mod:`schrohum.averaging`: Monte Carlo and quadrature ensembles
- :mod:`schrohum.hum`: cost functional, Gramian and conjugate gradients
- :mod:`schrohum.theory_checks`: numerical probes
- :mod:`schrohum.cli`: experiment runner
"""

from .averaging import Ensemble, MonteCarloBackend, mc_average_adjoint, mc_average_forward
from .distributions import DistributionSpec, Family, cauchy, normal, stable, uniform
from .fd_solver import Scheme, adjoint_solve_discrete, forward_solve
from .grids import SpatialGrid, TimeGrid
from .hum import HumConfig, HumResult, cg_solve
from .spectral import EigenBasis, SpectralBackend

__version__ = "0.1.0"

__all__ = [
    "DistributionSpec",
    "Family",
    "normal",
    "cauchy",
    "stable",
    "uniform",
    "SpatialGrid",
    "TimeGrid",
    "Scheme",
    "forward_solve",
    "adjoint_solve_discrete",
    "Ensemble",
    "MonteCarloBackend",
    "mc_average_forward",
    "mc_average_adjoint",
    "EigenBasis",
    "SpectralBackend",
    "HumConfig",
    "HumResult",
    "cg_solve",
]
