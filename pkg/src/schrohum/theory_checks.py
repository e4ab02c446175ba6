"""Numerical probes of the qualitative statements behind averaged control.

Each probe returns a :class:`ProbeReport`.  Statements of non-existence
(no exact averaged observability, no simultaneous null control) cannot be
verified by finite computation; the probes instead exhibit the quantity
that the argument drives to zero or infinity.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import special

from .distributions import DistributionSpec, Family, HypothesisHCertificate, known_certificate
from .fd_solver import Propagator, Scheme
from .grids import SpatialGrid, TimeGrid
from .spectral import EigenBasis, project, single_realization_terminal

__all__ = [
    "ProbeReport",
    "cf_square_integral",
    "decay_probe",
    "exact_obs_defect",
    "simultaneous_zero_scan",
    "restricted_gram",
    "spectral_inequality_constant",
    "cost_blowup_fit",
]

VERDICTS = ("pass", "fail", "informative")


@dataclass
class ProbeReport:
    """Outcome of one probe.

    ``quantities`` holds labeled scalars; ``series`` holds labeled arrays
    (one entry per ladder point, time level, etc.).
    """

    name: str
    inputs: dict
    quantities: list[tuple[str, float]] = field(default_factory=list)
    verdict: str = "informative"
    series: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}, got {self.verdict!r}")

    def quantity(self, label: str) -> float:
        for k, v in self.quantities:
            if k == label:
                return v
        raise KeyError(label)

    def to_csv(self, path) -> Path:
        """Long format ``quantity,index,value``; scalars leave ``index`` empty."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["quantity", "index", "value"])
            for label, value in self.quantities:
                w.writerow([label, "", _fmt(value)])
            for label, values in self.series.items():
                for i, v in enumerate(np.ravel(values)):
                    w.writerow([label, i, _fmt(v)])
        return path

    def summary(self) -> str:
        lines = [f"probe {self.name}: {self.verdict}"]
        for k, v in self.inputs.items():
            lines.append(f"  input {k} = {v}")
        for k, v in self.quantities:
            lines.append(f"  {k} = {v:.6g}" if isinstance(v, float) else f"  {k} = {v}")
        return "\n".join(lines)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _non_increasing(a, rtol: float = 1e-13) -> bool:
    a = np.asarray(a, dtype=float)
    if a.size < 2:
        return True
    return bool(np.all(np.diff(a) <= rtol * np.max(np.abs(a))))


# ---------------------------------------------------------------------------
# decay along the averaged adjoint


def decay_probe(spec: DistributionSpec, basis: EigenBasis, z0, times, lam_split: float | None = None) -> ProbeReport:
    """Track ``t -> ||E z(t)||`` for the low-frequency part, its complement, and the full datum.

    ``z0`` holds basis coefficients.  The low part keeps modes with
    ``lambda_n <= lam_split`` (default: the median eigenvalue).
    """
    c = np.asarray(z0, dtype=complex)
    if c.shape != (basis.n_modes,):
        raise ValueError(f"z0 must hold {basis.n_modes} coefficients")
    t = np.asarray(times, dtype=float).ravel()
    if t.size == 0 or np.any(t < 0) or np.any(np.diff(t) <= 0):
        raise ValueError("times must be non-negative and strictly increasing")
    lam = basis.eigenvalues
    if lam_split is None:
        lam_split = float(np.median(lam))
    low = lam <= lam_split
    mod2 = np.abs(spec.cf(np.outer(t, lam))) ** 2 * np.abs(c) ** 2
    seqs = {
        "norm_low": np.sqrt(mod2[:, low].sum(axis=1)),
        "norm_high": np.sqrt(mod2[:, ~low].sum(axis=1)),
        "norm_full": np.sqrt(mod2.sum(axis=1)),
    }
    monotone = {k: _non_increasing(v) for k, v in seqs.items()}
    strict = bool(t.size > 1 and np.all(np.diff(seqs["norm_full"]) < 0))
    if t.size == 1:
        verdict = "pass"
    elif known_certificate(spec) is None:
        verdict = "informative"
    else:
        verdict = "pass" if all(monotone.values()) else "fail"
    q = [(f"monotone_{k[5:]}", bool(v)) for k, v in monotone.items()]
    q += [("strictly_decreasing_full", strict), ("lam_split", lam_split)]
    return ProbeReport(
        "decay",
        {"law": spec.describe(), "n_modes": basis.n_modes, "n_times": t.size},
        q,
        verdict,
        {"t": t, **seqs},
    )


# ---------------------------------------------------------------------------
# lack of exact averaged observability


def cf_square_integral(spec: DistributionSpec, X) -> np.ndarray:
    """``int_0^X |phi(s)|^2 ds`` in closed form, vectorised over ``X >= 0``."""
    X = np.asarray(X, dtype=float)
    fam, p = spec.family, spec
    if fam is Family.UNIFORM:
        w = p["high"] - p["low"]
        # |phi(s)|^2 = sin^2(v)/v^2 with v = s w / 2
        v = 0.5 * w * X
        si, _ = special.sici(2.0 * v)
        with np.errstate(invalid="ignore", divide="ignore"):
            tail = np.where(v > 0, np.sin(v) ** 2 / np.where(v > 0, v, 1.0), 0.0)
        return (2.0 / w) * (si - tail)
    if fam is Family.EXPONENTIAL:
        rate = p["rate"]
        return rate * np.arctan(X / rate)
    if fam is Family.NORMAL:
        a, r = p["variance"], 2.0
    elif fam is Family.CAUCHY:
        a, r = 2.0 * p["scale"], 1.0
    else:
        a, r = 2.0 * p["scale"], p["stability"]
    # int_0^X exp(-a u^r) du = a^{-1/r} Gamma(1/r) P(1/r, a X^r) / r
    k = 1.0 / r
    return a ** (-k) * special.gamma(k) * special.gammainc(k, a * X**r) / r


def exact_obs_defect(spec: DistributionSpec, basis: EigenBasis, T: float, n_max: int, collapse: float = 1e-3) -> ProbeReport:
    """``I_n = int_0^T |phi(lambda_n t)|^2 dt`` for ``n = 0..n_max``.

    Exact averaged observability would need ``C I_n >= 1`` for every ``n``;
    the verdict is ``pass`` when ``I_n`` has a non-increasing tail reaching
    below ``collapse * I_0``.
    """
    if not T > 0:
        raise ValueError("T must be > 0")
    if n_max < 0 or n_max >= basis.n_modes:
        raise ValueError(f"n_max must lie in [0, {basis.n_modes - 1}]")
    lam = basis.eigenvalues[: n_max + 1]
    I = cf_square_integral(spec, lam * T) / lam
    q: list[tuple[str, float]] = [("I_0", float(I[0])), ("I_last", float(I[-1]))]
    below = np.flatnonzero(I < collapse * I[0])
    first = int(below[0]) if below.size else -1
    q.append(("first_n_below_collapse", first))
    if n_max == 0:
        verdict = "informative"
    else:
        # start of the longest non-increasing tail
        up = np.flatnonzero(np.diff(I) > 1e-15 * I[0])
        n0 = int(up[-1]) + 1 if up.size else 0
        q.append(("monotone_from", n0))
        verdict = "pass" if I[-1] < collapse * I[0] and n0 < n_max else "fail"
    return ProbeReport(
        "exact_obs_defect",
        {"law": spec.describe(), "T": T, "n_max": n_max, "collapse": collapse},
        q,
        verdict,
        {"n": np.arange(n_max + 1), "lambda": lam, "I": I},
    )


# ---------------------------------------------------------------------------
# simultaneous null control is confined to finitely many diffusivities


def _scan_spectral(xi, y0, u, grid: SpatialGrid, time: TimeGrid) -> np.ndarray:
    basis = EigenBasis(grid.L, grid.n)
    c0 = project(y0, basis, grid)
    f = project(grid.mask * u[1:], basis, grid) if u is not None else np.zeros((0, grid.n))
    # DST-I coefficients are orthonormal in the grid product, so ||y||_h = ||c||_2
    return np.linalg.norm(single_realization_terminal(xi, c0, f, basis, time), axis=1)


def _scan_fd(xi, y0, u, grid: SpatialGrid, time: TimeGrid, scheme) -> np.ndarray:
    yT = Propagator(xi, grid, time, scheme).forward(y0, u, keep=False)
    return np.sqrt(grid.dx * np.sum(np.abs(yT) ** 2, axis=1))


def simultaneous_zero_scan(
    y0,
    u,
    grid: SpatialGrid,
    time: TimeGrid,
    xi_range: tuple[float, float] = (-5.0, 5.0),
    resolution: float = 1e-3,
    threshold: float | None = None,
    evaluator: str = "spectral",
    scheme: Scheme | str = Scheme.BACKWARD_EULER,
    isolation_window: float = 0.05,
    max_bracket_width: float = 1e-2,
    threads: int = 1,
    chunk: int = 256,
) -> ProbeReport:
    """Scan ``g(xi) = ||y(T; xi; y0; u)||_h`` for near-zeros.

    A bracket is a maximal run of scan points with ``g < threshold``
    (default ``1e-3 ||y0||_h``).  It counts as isolated when ``g`` exceeds
    ``10 * threshold`` within ``isolation_window`` on each side that lies
    inside the scan range.
    """
    y0 = np.asarray(y0, dtype=complex)
    y0_norm = grid.norm(y0)
    if y0_norm == 0:
        raise ValueError("y0 = 0 makes every diffusivity a zero; the scan needs y0 != 0")
    u = None if u is None else np.asarray(u, dtype=complex)
    lo, hi = map(float, xi_range)
    if not (hi > lo and resolution > 0):
        raise ValueError("need xi_range[1] > xi_range[0] and resolution > 0")
    n_pts = int(round((hi - lo) / resolution)) + 1
    xi = lo + resolution * np.arange(n_pts)
    thr = 1e-3 * y0_norm if threshold is None else float(threshold)

    if evaluator == "spectral":
        fn = lambda x: _scan_spectral(x, y0, u, grid, time)  # noqa: E731
    elif evaluator == "fd":
        fn = lambda x: _scan_fd(x, y0, u, grid, time, scheme)  # noqa: E731
    else:
        raise ValueError(f"unknown evaluator {evaluator!r}")
    pieces = [xi[i : i + chunk] for i in range(0, n_pts, chunk)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            g = np.concatenate(list(pool.map(fn, pieces)))
    else:
        g = np.concatenate([fn(p) for p in pieces])

    below = g < thr
    edges = np.diff(np.concatenate([[0], below.astype(np.int8), [0]]))
    starts, stops = np.flatnonzero(edges == 1), np.flatnonzero(edges == -1) - 1
    win = max(1, int(round(isolation_window / resolution)))
    widths, isolated = [], []
    for a, b in zip(starts, stops):
        widths.append(xi[b] - xi[a] + resolution)
        left = g[max(0, a - win) : a]
        right = g[b + 1 : b + 1 + win]
        sides = [s for s in (left, right) if s.size]
        isolated.append(bool(sides) and all(np.max(s) > 10 * thr for s in sides))
    interior = np.r_[False, (g[1:-1] <= g[:-2]) & (g[1:-1] <= g[2:]), False]
    n_min = int(np.sum(interior & below))
    widths = np.asarray(widths, dtype=float)
    ok = all(isolated) and bool(np.all(widths <= max_bracket_width + 1e-12))
    q = [
        ("threshold", thr),
        ("n_brackets", len(widths)),
        ("n_local_minima_below", n_min),
        ("g_min", float(g.min())),
        ("xi_at_g_min", float(xi[np.argmin(g)])),
        ("max_bracket_width", float(widths.max()) if widths.size else 0.0),
    ]
    return ProbeReport(
        "simultaneous_zero_scan",
        {"xi_range": (lo, hi), "resolution": resolution, "evaluator": evaluator, "control": u is not None},
        q,
        "pass" if ok else "fail",
        {
            "xi": xi,
            "g": g,
            "bracket_lo": xi[starts] if widths.size else np.empty(0),
            "bracket_width": widths,
            "bracket_isolated": np.asarray(isolated, dtype=float),
        },
    )


# ---------------------------------------------------------------------------
# spectral inequality constant


def restricted_gram(basis: EigenBasis, region: tuple[float, float]) -> np.ndarray:
    """``G[m, n] = int_region e_m e_n dx`` for the sine basis, evaluated analytically."""
    a, b = map(float, region)
    if not 0 <= a < b <= basis.L:
        raise ValueError("region must satisfy 0 <= a < b <= L")
    k = basis.wavenumbers
    diff = k[:, None] - k[None, :]
    summ = k[:, None] + k[None, :]

    def cos_int(w):
        out = np.full(w.shape, b - a)
        nz = w != 0
        out[nz] = (np.sin(w[nz] * b) - np.sin(w[nz] * a)) / w[nz]
        return out

    return (cos_int(diff) - cos_int(summ)) / basis.L


def spectral_inequality_constant(basis: EigenBasis, region: tuple[float, float], n_ladder: int | None = None) -> ProbeReport:
    """Best constant ``K(lambda)`` with ``||c|| <= K ||sum c_n e_n||_{L2(region)}`` on ``span{e_n : lambda_n <= lambda}``.

    ``K = lambda_min(G)^{-1/2}`` for the leading block of the restricted Gram
    matrix.  ``log K`` is fitted against ``sqrt(lambda)``.
    """
    n_ladder = basis.n_modes if n_ladder is None else int(n_ladder)
    if not 1 <= n_ladder <= basis.n_modes:
        raise ValueError("n_ladder must lie in [1, n_modes]")
    G = restricted_gram(basis, region)
    lam = basis.eigenvalues[:n_ladder]
    K = np.empty(n_ladder)
    for j in range(n_ladder):
        ev = np.linalg.eigvalsh(G[: j + 1, : j + 1])[0]
        K[j] = 1.0 / math.sqrt(ev) if ev > 0 else math.inf
    logK = np.log(K)
    q: list[tuple[str, float]] = [("K_single_mode", float(K[0])), ("non_decreasing", bool(np.all(np.diff(K) >= -1e-12 * K[1:])))]
    if n_ladder >= 3 and np.all(np.isfinite(logK)):
        slope, icpt = np.polyfit(np.sqrt(lam), logK, 1)
        resid = logK - (slope * np.sqrt(lam) + icpt)
        q += [("slope_logK_vs_sqrt_lambda", float(slope)), ("intercept", float(icpt)), ("fit_rms", float(np.sqrt(np.mean(resid**2))))]
    return ProbeReport(
        "spectral_inequality",
        {"region": tuple(region), "L": basis.L, "n_ladder": n_ladder},
        q,
        "informative",
        {"lambda": lam, "K": K, "logK": logK},
    )


# ---------------------------------------------------------------------------
# cost of null control as the horizon shrinks


def cost_blowup_fit(
    spec: DistributionSpec,
    T_ladder: Sequence[float],
    grid: SpatialGrid,
    y0,
    Nt: int,
    config=None,
    certificate: HypothesisHCertificate | None = None,
    backend: str = "spectral",
    ensemble=None,
    scheme: Scheme | str = Scheme.BACKWARD_EULER,
) -> ProbeReport:
    """Run HUM on each horizon and fit ``log(cost) = a + b T^{-p}``, ``p = theta / (2r - 1)``.

    ``cost`` is ``||u|| / ||y0||_h``.  ``backend`` is ``"spectral"`` (exact
    averages) or ``"mc_fd"`` (needs ``ensemble``).
    """
    from .averaging import MonteCarloBackend
    from .hum import HumConfig, cg_solve
    from .spectral import SpectralBackend

    cert = certificate or known_certificate(spec)
    if cert is None:
        raise ValueError(f"no hypothesis (H) certificate known for {spec.describe()}; pass one explicitly")
    p = cert.cost_exponent
    T = np.asarray(sorted(map(float, T_ladder), reverse=True))
    if T.size == 0 or np.any(T <= 0):
        raise ValueError("T_ladder must hold positive horizons")
    y0 = np.asarray(y0, dtype=complex)
    y0_norm = grid.norm(y0)
    if y0_norm == 0:
        raise ValueError("y0 must be nonzero")
    cost, iters, err = [], [], []
    for Tk in T:
        time = TimeGrid(Tk, Nt)
        if backend == "spectral":
            be = SpectralBackend(spec, grid, time)
        elif backend == "mc_fd":
            if ensemble is None:
                raise ValueError("mc_fd backend needs an ensemble")
            be = MonteCarloBackend(ensemble, grid, time, scheme)
        else:
            raise ValueError(f"unknown backend {backend!r}")
        res = cg_solve(y0, be, config or HumConfig())
        cost.append(res.control_norm / y0_norm)
        iters.append(res.iterations)
        err.append(res.terminal_error)
    cost = np.asarray(cost)
    q: list[tuple[str, float]] = [("exponent", p)]
    if T.size >= 2 and np.all(cost > 0):
        b, a = np.polyfit(T**-p, np.log(cost), 1)
        q += [("fit_a", float(a)), ("fit_b", float(b))]
    return ProbeReport(
        "cost_blowup",
        {"law": spec.describe(), "certificate": (cert.c, cert.r, cert.theta), "Nt": Nt, "backend": backend},
        q,
        "informative",
        {"T": T, "cost": cost, "iterations": np.asarray(iters, dtype=float), "terminal_error": np.asarray(err)},
    )
