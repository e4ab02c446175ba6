import warnings

import numpy as np
import pytest

from schrohum.averaging import Ensemble, MonteCarloBackend
from schrohum.backend import AdjointTrajectory, AveragedBackend
from schrohum.distributions import cauchy, normal
from schrohum.grids import SpatialGrid, TimeGrid, space_time_norm
from schrohum.hum import (
    HumConfig,
    NotPositiveError,
    StagnationWarning,
    cg_solve,
    cost_functional,
    extract_control,
    gramian_apply,
)
from schrohum.spectral import SpectralBackend

from conftest import crandn


@pytest.fixture(scope="module")
def small():
    grid, time = SpatialGrid(1.0, 8, (0.25, 0.75)), TimeGrid(0.5, 5)
    return MonteCarloBackend(Ensemble.draw(normal(), 10, 0), grid, time)


@pytest.fixture(scope="module")
def test1_backend():
    grid, time = SpatialGrid(1.0, 40, (0.25, 0.75)), TimeGrid(0.4, 80)
    return MonteCarloBackend(Ensemble.draw(normal(), 50, 0), grid, time)


def _dense(backend):
    n = backend.grid.n
    return np.stack([gramian_apply(e, backend) for e in np.eye(n, dtype=complex)], axis=1)


def test_config_validation():
    with pytest.raises(ValueError):
        HumConfig(tol=0)
    with pytest.raises(ValueError):
        HumConfig(k_max=0)


def test_cost_trivial_cases(small, rng):
    n = small.grid.n
    assert cost_functional(np.zeros(n), small, crandn(rng, n)) == 0.0
    for _ in range(5):
        assert cost_functional(crandn(rng, n), small, np.zeros(n)) >= 0.0


def test_cost_is_quadratic_form_plus_pairing(small, rng):
    n = small.grid.n
    z, y0 = crandn(rng, n), crandn(rng, n)
    quad = small.grid.inner(gramian_apply(z, small), z).real
    pair = small.grid.inner(small.free_terminal(y0), z).real
    assert cost_functional(z, small, y0) == pytest.approx(0.5 * quad + pair, rel=1e-12)


def test_gramian_linear_and_zero(small, rng):
    n = small.grid.n
    assert np.all(gramian_apply(np.zeros(n), small) == 0)
    a, b = crandn(rng, n), crandn(rng, n)
    assert np.allclose(gramian_apply(a + (2 - 1j) * b, small), gramian_apply(a, small) + (2 - 1j) * gramian_apply(b, small), atol=1e-14)


def test_gramian_symmetry(test1_backend, rng):
    be = test1_backend
    for _ in range(5):
        a, b = crandn(rng, be.grid.n), crandn(rng, be.grid.n)
        lhs = be.grid.inner(gramian_apply(a, be), b)
        rhs = np.conj(be.grid.inner(gramian_apply(b, be), a))
        assert abs(lhs - rhs) <= 1e-10 * be.grid.norm(a) * be.grid.norm(b)


def test_averaged_duality_bookkeeping(test1_backend, rng):
    be = test1_backend
    y0, z = crandn(rng, be.grid.n), crandn(rng, be.grid.n)
    lhs = be.grid.inner(y0, be.adjoint(z).levels[0])
    rhs = be.grid.inner(be.free_terminal(y0), z)
    assert abs(lhs - rhs) <= 1e-10 * abs(rhs)


def test_extract_control_masks(test1_backend, rng):
    be = test1_backend
    adj = AdjointTrajectory(crandn(rng, be.time.Nt + 1, be.grid.n), crandn(rng, be.time.Nt, be.grid.n))
    u = extract_control(adj, be)
    outside = be.grid.mask == 0
    assert np.all(u[:, outside] == 0)
    assert np.array_equal(u[1:, ~outside], adj.sources[:, ~outside])
    zero = AdjointTrajectory(np.zeros_like(adj.levels), np.zeros_like(adj.sources))
    assert np.all(extract_control(zero, be) == 0)
    full = SpectralBackend(normal(), SpatialGrid(1.0, 40), be.time)
    assert np.array_equal(extract_control(adj, full)[1:], adj.sources)


def test_y0_zero_immediate_exit(small):
    res = cg_solve(np.zeros(small.grid.n), small, HumConfig(z_guess=None))
    assert res.iterations == 0 and res.converged
    assert np.all(res.control == 0) and res.terminal_error == 0.0


def test_cg_matches_dense_least_norm(small, rng):
    y0 = crandn(rng, small.grid.n)
    res = cg_solve(y0, small, HumConfig(tol=1e-13, k_max=200))
    L = _dense(small)
    b = -small.free_terminal(y0)
    ref = np.linalg.lstsq(L, b, rcond=None)[0]
    assert np.linalg.norm(res.z_T_opt - ref) <= 1e-8 * np.linalg.norm(ref)


def test_cg_euler_lagrange_and_terminal_error(test1_backend):
    be = test1_backend
    y0 = np.sin(np.pi * be.grid.x)
    res = cg_solve(y0, be, HumConfig(z_guess=y0.astype(complex)))
    assert res.converged and res.residual_trace[-1] <= 1e-5
    el = be.grid.norm(gramian_apply(res.z_T_opt, be) + be.free_terminal(y0))
    assert el == pytest.approx(res.residual_trace[-1], rel=1e-6)
    # terminal averaged state equals the Euler-Lagrange residual
    assert res.terminal_error == pytest.approx(el, rel=1e-8)
    assert res.control_norm == pytest.approx(space_time_norm(res.control, be.grid, be.time))
    assert np.all(res.control[:, be.grid.mask == 0] == 0)
    s = res.summary()
    assert s["iterations"] == res.iterations and s["terminal_error"] == res.terminal_error


def test_first_order_optimality(test1_backend, rng):
    be = test1_backend
    y0 = np.sin(np.pi * be.grid.x).astype(complex)
    res = cg_solve(y0, be, HumConfig(tol=1e-9, k_max=200))
    j0 = cost_functional(res.z_T_opt, be, y0)
    for _ in range(4):
        h = 1e-3 * crandn(rng, be.grid.n)
        # J(z + h) - J(z) = <grad, h> + O(|h|^2) with |grad| <= tol
        assert cost_functional(res.z_T_opt + h, be, y0) - j0 >= -1e-9 * be.grid.norm(h) - 1e-14


def test_tighter_tol_does_not_increase_error(test1_backend):
    be = test1_backend
    y0 = np.sin(np.pi * be.grid.x)
    loose = cg_solve(y0, be, HumConfig(tol=1e-4))
    tight = cg_solve(y0, be, HumConfig(tol=1e-5))
    assert tight.terminal_error <= loose.terminal_error


def test_kmax_stop(test1_backend):
    be = test1_backend
    res = cg_solve(np.sin(np.pi * be.grid.x), be, HumConfig(tol=1e-14, k_max=3))
    assert res.iterations == 3 and not res.converged and len(res.residual_trace) == 4


def test_cauchy_converges(rng):
    grid, time = SpatialGrid(1.0, 40, (0.25, 0.75)), TimeGrid(0.2, 80)
    be = MonteCarloBackend(Ensemble.draw(cauchy(), 50, 0), grid, time)
    res = cg_solve(np.sin(np.pi * grid.x), be)
    assert res.converged and res.terminal_error <= 1e-5


def test_spectral_backend_cg():
    grid = SpatialGrid(1.0, 40, (0.25, 0.75))
    be = SpectralBackend(normal(), grid, TimeGrid(0.4, 80))
    res = cg_solve(np.sin(np.pi * grid.x), be)
    assert res.converged


class _Fake(AveragedBackend):
    def __init__(self, matrix, rhs):
        self.grid = SpatialGrid(1.0, matrix.shape[0] + 1)
        self.time = TimeGrid(1.0, 1)
        self.A, self.rhs = matrix, rhs

    def gramian(self, z):
        return self.A @ z

    def free_terminal(self, y0):
        return -self.rhs

    def forward(self, y0, u=None):
        return np.zeros((2, self.grid.n), dtype=complex)

    def forward_terminal(self, y0, u=None):
        return np.zeros(self.grid.n, dtype=complex)

    def adjoint(self, z):
        return AdjointTrajectory(np.zeros((2, self.grid.n), complex), np.zeros((1, self.grid.n), complex))


def test_not_positive_raises():
    be = _Fake(-np.eye(3, dtype=complex), np.ones(3, dtype=complex))
    with pytest.raises(NotPositiveError):
        cg_solve(np.zeros(3), be)


def test_stagnation_warns():
    # a non-symmetric operator makes CG residuals grow
    A = np.array([[1.0, 50.0, 0.0], [-50.0, 1.0, 0.0], [0.0, 0.0, 1.0]], dtype=complex)
    be = _Fake(A, np.array([1.0, 1.0, 1.0], dtype=complex))
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        try:
            cg_solve(np.zeros(3), be, HumConfig(tol=1e-30, k_max=30))
        except NotPositiveError:
            pass
    assert any(issubclass(w.category, StagnationWarning) for w in rec)
