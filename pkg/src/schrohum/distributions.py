"""Random diffusivity laws: characteristic functions, densities, samplers.

Every law is described by a :class:`DistributionSpec`.  The characteristic
function ``phi(s) = E[exp(i s alpha)]`` is what the averaged dynamics see:
mode ``n`` of the averaged adjoint is multiplied by ``phi(lambda_n t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping

import numpy as np
from scipy import integrate

from .streams import open_uniforms

__all__ = [
    "Family",
    "DistributionSpec",
    "HypothesisHCertificate",
    "ParameterError",
    "QuadratureError",
    "normal",
    "cauchy",
    "stable",
    "uniform",
    "exponential",
    "cf_eval",
    "log_abs_cf",
    "pdf_eval",
    "sample",
    "sample_block",
    "transform_uniforms",
    "empirical_cf",
    "known_certificate",
    "check_hypothesis_H",
]


class ParameterError(ValueError):
    """A distribution parameter lies outside its admissible domain."""


class QuadratureError(ArithmeticError):
    """Numerical Fourier inversion of a characteristic function failed."""


class Family(str, Enum):
    NORMAL = "normal"
    CAUCHY = "cauchy"
    STABLE = "stable"
    UNIFORM = "uniform"
    EXPONENTIAL = "exponential"


_PARAMS = {
    Family.NORMAL: {"mean": 0.0, "variance": 1.0},
    Family.CAUCHY: {"loc": 0.0, "scale": 1.0},
    Family.STABLE: {"stability": 2.0, "skewness": 0.0, "shift": 0.0, "scale": 0.5},
    Family.UNIFORM: {"low": 0.0, "high": 1.0},
    Family.EXPONENTIAL: {"rate": 1.0},
}


@dataclass(frozen=True)
class DistributionSpec:
    """A diffusivity law: a family name plus its named real parameters.

    Parameters not given take the family defaults (standard normal, standard
    Cauchy, Gaussian-equivalent stable law, Uniform(0, 1), Exponential(1)).
    """

    family: Family
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        try:
            family = self.family if isinstance(self.family, Family) else Family(str(self.family).lower())
        except ValueError:
            raise ParameterError(f"unknown distribution family {self.family!r}") from None
        defaults = _PARAMS[family]
        unknown = set(self.params) - set(defaults)
        if unknown:
            raise ParameterError(f"{family.value}: unknown parameter(s) {sorted(unknown)}")
        merged = {k: float(self.params.get(k, v)) for k, v in defaults.items()}
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "params", merged)
        _validate(family, merged)

    def __getitem__(self, name: str) -> float:
        return self.params[name]

    def cf(self, s):
        return cf_eval(self, s)

    def log_abs_cf(self, s):
        return log_abs_cf(self, s)

    def pdf(self, x):
        return pdf_eval(self, x)

    @property
    def absolutely_continuous(self) -> bool:
        return True

    def describe(self) -> str:
        args = ", ".join(f"{k}={v:g}" for k, v in self.params.items())
        return f"{self.family.value}({args})"


def _validate(family: Family, p: Mapping[str, float]) -> None:
    for name, value in p.items():
        if not math.isfinite(value):
            raise ParameterError(f"{family.value}: {name} must be finite, got {value}")
    if family is Family.NORMAL and not p["variance"] > 0:
        raise ParameterError("normal: variance must be > 0")
    if family is Family.CAUCHY and not p["scale"] > 0:
        raise ParameterError("cauchy: scale must be > 0")
    if family is Family.STABLE:
        if not 0 < p["stability"] <= 2:
            raise ParameterError("stable: stability must lie in (0, 2]")
        if not -1 <= p["skewness"] <= 1:
            raise ParameterError("stable: skewness must lie in [-1, 1]")
        if not p["scale"] > 0:
            raise ParameterError("stable: scale must be > 0")
    if family is Family.UNIFORM and not p["low"] < p["high"]:
        raise ParameterError("uniform: low must be < high")
    if family is Family.EXPONENTIAL and not p["rate"] > 0:
        raise ParameterError("exponential: rate must be > 0")


def normal(mean: float = 0.0, variance: float = 1.0) -> DistributionSpec:
    return DistributionSpec(Family.NORMAL, {"mean": mean, "variance": variance})


def cauchy(loc: float = 0.0, scale: float = 1.0) -> DistributionSpec:
    return DistributionSpec(Family.CAUCHY, {"loc": loc, "scale": scale})


def stable(stability: float, skewness: float = 0.0, shift: float = 0.0, scale: float = 1.0) -> DistributionSpec:
    return DistributionSpec(
        Family.STABLE,
        {"stability": stability, "skewness": skewness, "shift": shift, "scale": scale},
    )


def uniform(low: float = 0.0, high: float = 1.0) -> DistributionSpec:
    return DistributionSpec(Family.UNIFORM, {"low": low, "high": high})


def exponential(rate: float = 1.0) -> DistributionSpec:
    return DistributionSpec(Family.EXPONENTIAL, {"rate": rate})


# ---------------------------------------------------------------------------
# characteristic functions


def _stable_exponent(p: Mapping[str, float], s: np.ndarray) -> np.ndarray:
    """Complex log of the stable CF, ``i mu s - c|s|^r (1 + i beta sign(s) Phi(s, r))``."""
    r, beta, mu, c = p["stability"], p["skewness"], p["shift"], p["scale"]
    a = np.abs(s)
    if r == 1.0:
        with np.errstate(divide="ignore", invalid="ignore"):
            # |s| log|s| -> 0 as s -> 0
            skew = np.where(a > 0, np.sign(s) * (-2.0 / np.pi) * a * np.log(np.where(a > 0, a, 1.0)), 0.0)
        return 1j * mu * s - c * a - 1j * c * beta * skew
    ar = a**r
    return 1j * mu * s - c * ar * (1.0 + 1j * beta * np.sign(s) * math.tan(math.pi * r / 2.0))


def cf_eval(spec: DistributionSpec, s):
    """Characteristic function ``E[exp(i s alpha)]``; vectorised over ``s``."""
    s_arr = np.asarray(s, dtype=float)
    p, fam = spec.params, spec.family
    if fam is Family.NORMAL:
        out = np.exp(1j * p["mean"] * s_arr - 0.5 * p["variance"] * s_arr**2)
    elif fam is Family.CAUCHY:
        out = np.exp(1j * p["loc"] * s_arr - p["scale"] * np.abs(s_arr))
    elif fam is Family.STABLE:
        out = np.exp(_stable_exponent(p, s_arr))
    elif fam is Family.UNIFORM:
        a, b = p["low"], p["high"]
        w = b - a
        # (e^{isb} - e^{isa}) / (is(b-a)) = e^{is(a+b)/2} sinc(s w / 2)
        out = np.exp(0.5j * s_arr * (a + b)) * np.sinc(s_arr * w / (2.0 * np.pi))
    else:
        lam = p["rate"]
        out = lam / (lam - 1j * s_arr)
    return out[()] if out.ndim == 0 else out


def log_abs_cf(spec: DistributionSpec, s):
    """``log|phi(s)|`` computed without forming ``phi`` where a closed form exists.

    Returns ``-inf`` at exact zeros of the CF.
    """
    s_arr = np.asarray(s, dtype=float)
    p, fam = spec.params, spec.family
    if fam is Family.NORMAL:
        out = -0.5 * p["variance"] * s_arr**2
    elif fam is Family.CAUCHY:
        out = -p["scale"] * np.abs(s_arr)
    elif fam is Family.STABLE:
        out = -p["scale"] * np.abs(s_arr) ** p["stability"]
    elif fam is Family.UNIFORM:
        w = p["high"] - p["low"]
        with np.errstate(divide="ignore"):
            out = np.log(np.abs(np.sinc(s_arr * w / (2.0 * np.pi))))
    else:
        out = -0.5 * np.log1p((s_arr / p["rate"]) ** 2)
    return out[()] if out.ndim == 0 else out


def empirical_cf(samples, s):
    """Sample mean of ``exp(i s alpha_k)``."""
    samples = np.asarray(samples, dtype=float)
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.exp(1j * np.outer(s_arr, samples)).mean(axis=1)
    return out[0] if np.ndim(s) == 0 else out


# ---------------------------------------------------------------------------
# densities

_INVERSION_FLOOR = 1e-14


def _stable_pdf_numeric(p: Mapping[str, float], x: float) -> float:
    r, c = p["stability"], p["scale"]
    s_max = (math.log(1.0 / _INVERSION_FLOOR) / c) ** (1.0 / r)
    spec_p = dict(p)

    def phi(s):
        return np.exp(_stable_exponent(spec_p, np.asarray(s, dtype=float)))

    # rho(x) = (1/pi) int_0^smax Re(e^{-isx} phi(s)) ds
    #        = (1/pi) int [Re phi cos(sx) + Im phi sin(sx)] ds
    kw = dict(limit=2000, full_output=1)
    if x == 0.0:
        parts = [integrate.quad(lambda s: float(np.real(phi(s))), 0.0, s_max, **kw)]
    else:
        parts = [
            integrate.quad(lambda s: float(np.real(phi(s))), 0.0, s_max, weight="cos", wvar=x, **kw),
            integrate.quad(lambda s: float(np.imag(phi(s))), 0.0, s_max, weight="sin", wvar=x, **kw),
        ]
    total = 0.0
    for res in parts:
        value, abserr = res[0], res[1]
        if len(res) > 3:
            raise QuadratureError(
                f"stable pdf inversion at x={x:g} did not converge "
                f"(abserr={abserr:.3e}, s_max={s_max:.3g}): {res[3]}"
            )
        total += value
    return max(total / math.pi, 0.0)


def pdf_eval(spec: DistributionSpec, x):
    """Probability density at ``x``; vectorised over ``x``."""
    x_arr = np.asarray(x, dtype=float)
    p, fam = spec.params, spec.family
    if fam is Family.STABLE:
        r, beta = p["stability"], p["skewness"]
        if r == 2.0:
            return pdf_eval(normal(p["shift"], 2.0 * p["scale"]), x)
        if r == 1.0 and beta == 0.0:
            return pdf_eval(cauchy(p["shift"], p["scale"]), x)
        out = np.vectorize(lambda v: _stable_pdf_numeric(p, float(v)), otypes=[float])(x_arr)
    elif fam is Family.NORMAL:
        var = p["variance"]
        out = np.exp(-((x_arr - p["mean"]) ** 2) / (2 * var)) / math.sqrt(2 * math.pi * var)
    elif fam is Family.CAUCHY:
        g = p["scale"]
        out = 1.0 / (math.pi * g * (1.0 + ((x_arr - p["loc"]) / g) ** 2))
    elif fam is Family.UNIFORM:
        a, b = p["low"], p["high"]
        out = np.where((x_arr >= a) & (x_arr <= b), 1.0 / (b - a), 0.0)
    else:
        lam = p["rate"]
        out = np.where(x_arr >= 0, lam * np.exp(-lam * np.maximum(x_arr, 0.0)), 0.0)
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# sampling


def transform_uniforms(spec: DistributionSpec, u1, u2=None):
    """Map one or two independent uniforms on (0, 1) to a variate of ``spec``.

    Normal and stable laws consume both uniforms; the other families use
    only ``u1`` (inverse CDF).
    """
    u1 = np.asarray(u1, dtype=float)
    p, fam = spec.params, spec.family
    if fam is Family.CAUCHY:
        return p["loc"] + p["scale"] * np.tan(np.pi * (u1 - 0.5))
    if fam is Family.UNIFORM:
        return p["low"] + (p["high"] - p["low"]) * u1
    if fam is Family.EXPONENTIAL:
        return -np.log1p(-u1) / p["rate"]
    if u2 is None:
        raise ValueError(f"{fam.value} sampling needs two uniforms")
    u2 = np.asarray(u2, dtype=float)
    if fam is Family.NORMAL:
        sd = math.sqrt(p["variance"])
        return p["mean"] + sd * np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
    return _chambers_mallows_stuck(p, u1, u2)


def _chambers_mallows_stuck(p: Mapping[str, float], u1, u2):
    r, c, mu = p["stability"], p["scale"], p["shift"]
    # CF convention here carries +i*beta; the classical construction uses -i*beta.
    beta = -p["skewness"]
    sigma = c ** (1.0 / r)
    v = np.pi * (u1 - 0.5)
    w = -np.log(u2)
    if r == 1.0:
        half_pi = 0.5 * np.pi
        x = (2.0 / np.pi) * ((half_pi + beta * v) * np.tan(v) - beta * np.log(half_pi * w * np.cos(v) / (half_pi + beta * v)))
        return sigma * x + (2.0 / np.pi) * beta * sigma * math.log(sigma) + mu
    t = beta * math.tan(np.pi * r / 2.0)
    b = math.atan(t) / r
    s = (1.0 + t * t) ** (1.0 / (2.0 * r))
    x = s * np.sin(r * (v + b)) / np.cos(v) ** (1.0 / r) * (np.cos(v - r * (v + b)) / w) ** ((1.0 - r) / r)
    return sigma * x + mu


def sample_block(spec: DistributionSpec, seed: int, start: int, count: int) -> np.ndarray:
    """Variates ``start .. start+count-1`` (0-based) of the stream keyed by ``seed``."""
    u = open_uniforms(seed, start, count)
    return np.asarray(transform_uniforms(spec, u[:, 0], u[:, 1]), dtype=float)


def sample(spec: DistributionSpec, seed: int, k: int) -> float:
    """The ``k``-th variate (1-based) of the stream keyed by ``seed``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return float(sample_block(spec, seed, k - 1, 1)[0])


# ---------------------------------------------------------------------------
# Hypothesis (H)


@dataclass(frozen=True)
class HypothesisHCertificate:
    """Constants of the dilation decay bound ``|phi(l t2)| <= exp(-c l^r (t2-t1)^theta) |phi(l t1)|``.

    ``verified`` and ``max_violation`` are filled by :func:`check_hypothesis_H`;
    ``worst`` holds the (lambda, t1, t2) triple attaining the maximum.
    """

    c: float
    r: float
    theta: float
    T0: float = 1.0
    verified: bool = False
    max_violation: float = math.inf
    worst: tuple[float, float, float] | None = None
    skipped: int = 0

    def __post_init__(self):
        if not self.c > 0:
            raise ParameterError("certificate: c must be > 0")
        if not self.r > 0.5:
            raise ParameterError("certificate: r must be > 1/2")
        if not self.theta > 0:
            raise ParameterError("certificate: theta must be > 0")
        if not self.T0 > 0:
            raise ParameterError("certificate: T0 must be > 0")

    @property
    def cost_exponent(self) -> float:
        """Exponent ``theta / (2r - 1)`` of the small-time control cost growth."""
        return self.theta / (2.0 * self.r - 1.0)


def known_certificate(spec: DistributionSpec, T0: float = 1.0) -> HypothesisHCertificate | None:
    """Analytic (c, r, theta) for laws known to satisfy the decay hypothesis, else ``None``."""
    p, fam = spec.params, spec.family
    if fam is Family.NORMAL:
        return HypothesisHCertificate(p["variance"] / 2.0, 2.0, 2.0, T0)
    if fam is Family.CAUCHY:
        return HypothesisHCertificate(p["scale"], 1.0, 1.0, T0)
    if fam is Family.STABLE:
        r, c = p["stability"], p["scale"]
        if r > 1.0:
            return HypothesisHCertificate(c, r, r, T0)
        if r > 0.5:
            # t -> t^(1/r) has Lipschitz constant T0^(1-r)/r on [0, T0^r]
            return HypothesisHCertificate(c * r * T0 ** (r - 1.0), r, 1.0, T0)
    return None


_LOG_FLOOR = math.log(np.finfo(float).tiny)


def check_hypothesis_H(
    spec: DistributionSpec,
    cert: HypothesisHCertificate,
    lam_max: float = 50.0,
    n_lam: int = 256,
    n_t2: int = 256,
    n_t1: int = 64,
    tol: float = 1e-9,
) -> HypothesisHCertificate:
    """Falsification test of the decay hypothesis on a finite grid.

    Evaluates ``log|phi(l t2)| - log|phi(l t1)| + c l^r (t2 - t1)^theta`` for
    ``l`` in ``[0, lam_max]``, ``t2`` in ``(0, T0]`` and ``t1 = f t2`` with
    ``f`` in ``[0, 1)``.  Grid points where ``|phi(l t1)|`` is below the
    floating-point floor are skipped and counted.
    """
    if not lam_max > 0:
        raise ValueError("lam_max must be > 0")
    lam = np.linspace(0.0, lam_max, n_lam)
    t2 = np.linspace(cert.T0 / n_t2, cert.T0, n_t2)
    frac = np.arange(n_t1) / n_t1

    L = lam[:, None, None]
    T2 = t2[None, :, None]
    T1 = frac[None, None, :] * T2
    log2 = log_abs_cf(spec, L * T2)
    log1 = log_abs_cf(spec, L * T1)
    bound = cert.c * L**cert.r * (T2 - T1) ** cert.theta
    # only the uniform law's log-modulus is formed from |phi| itself
    floor = _LOG_FLOOR if spec.family is Family.UNIFORM else -np.inf
    valid = np.broadcast_to(log1 > floor, bound.shape)
    with np.errstate(invalid="ignore"):
        slack = np.where(valid, log2 - log1 + bound, -np.inf)
    idx = np.unravel_index(int(np.argmax(slack)), slack.shape)
    worst_val = float(slack[idx])
    worst = (float(lam[idx[0]]), float(frac[idx[2]] * t2[idx[1]]), float(t2[idx[1]]))
    return replace(
        cert,
        verified=bool(worst_val <= tol),
        max_violation=worst_val,
        worst=worst,
        skipped=int(valid.size - np.count_nonzero(valid)),
    )
