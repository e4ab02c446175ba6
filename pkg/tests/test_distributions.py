import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from schrohum.distributions import (
    DistributionSpec,
    Family,
    HypothesisHCertificate,
    ParameterError,
    cauchy,
    cf_eval,
    check_hypothesis_H,
    empirical_cf,
    exponential,
    known_certificate,
    log_abs_cf,
    normal,
    pdf_eval,
    sample,
    sample_block,
    stable,
    transform_uniforms,
    uniform,
)

LAWS = [
    normal(),
    normal(1.5, 0.3),
    cauchy(),
    cauchy(-2.0, 0.5),
    stable(1.5, 0.4, 0.3, 0.8),
    stable(1.0, -0.7, 0.0, 1.2),
    stable(0.7, 1.0, 0.0, 1.0),
    uniform(),
    uniform(-1.0, 3.0),
    exponential(2.0),
]
finite = st.floats(-200, 200, allow_nan=False)


# --- characteristic functions -------------------------------------------------


def test_cf_reference_values():
    assert cf_eval(normal(), 0.0) == 1.0 + 0j
    assert cf_eval(normal(), 1.0) == pytest.approx(math.exp(-0.5), abs=1e-15)
    assert cf_eval(cauchy(), 2.0) == pytest.approx(math.exp(-2.0), abs=1e-15)
    assert cf_eval(stable(2.0, 0.0, 0.0, 0.5), 1.0) == pytest.approx(math.exp(-0.5), abs=1e-15)


def test_uniform_and_exponential_closed_forms():
    a, b, s = -1.0, 3.0, 0.7
    direct = (np.exp(1j * s * b) - np.exp(1j * s * a)) / (1j * s * (b - a))
    assert cf_eval(uniform(a, b), s) == pytest.approx(direct, abs=1e-15)
    assert cf_eval(uniform(a, b), 0.0) == 1.0
    assert cf_eval(exponential(2.0), s) == pytest.approx(2.0 / (2.0 - 1j * s), abs=1e-15)


def _fourier_of_density(spec, s):
    """``int pdf(x) e^{isx} dx`` with QAWF on each half-line."""
    f = lambda x: float(pdf_eval(spec, x))  # noqa: E731
    g = lambda x: float(pdf_eval(spec, -x))  # noqa: E731
    re = integrate.quad(f, 0, np.inf, weight="cos", wvar=s)[0] + integrate.quad(g, 0, np.inf, weight="cos", wvar=s)[0]
    im = integrate.quad(f, 0, np.inf, weight="sin", wvar=s)[0] - integrate.quad(g, 0, np.inf, weight="sin", wvar=s)[0]
    return re + 1j * im


@pytest.mark.parametrize("spec", [normal(), normal(1.5, 0.3), cauchy(), cauchy(-2.0, 0.5), exponential(2.0)], ids=str)
@pytest.mark.parametrize("s", [0.3, 1.7])
def test_cf_against_density_transform(spec, s):
    assert cf_eval(spec, s) == pytest.approx(_fourier_of_density(spec, s), abs=1e-7)


@pytest.mark.parametrize("spec", [uniform(), uniform(-1.0, 3.0)], ids=str)
def test_uniform_cf_against_quadrature(spec):
    a, b = spec["low"], spec["high"]
    for s in (0.3, 1.7, 9.0):
        re = integrate.quad(lambda x: math.cos(s * x), a, b)[0] / (b - a)
        im = integrate.quad(lambda x: math.sin(s * x), a, b)[0] / (b - a)
        assert cf_eval(spec, s) == pytest.approx(re + 1j * im, abs=1e-12)


@pytest.mark.parametrize("spec", LAWS, ids=lambda s: s.describe())
@given(s=finite)
def test_cf_symmetry_and_modulus(spec, s):
    v = cf_eval(spec, s)
    assert abs(v) <= 1.0 + 1e-15
    assert cf_eval(spec, -s) == pytest.approx(np.conj(v), abs=1e-15)


@pytest.mark.parametrize("spec", LAWS, ids=lambda s: s.describe())
def test_cf_at_zero_and_vectorised(spec):
    s = np.linspace(-5, 5, 11)
    out = cf_eval(spec, s)
    assert out.shape == s.shape
    assert cf_eval(spec, 0.0) == pytest.approx(1.0, abs=1e-15)
    assert np.allclose(out, [cf_eval(spec, x) for x in s], atol=1e-15)


@given(var=st.floats(0.01, 10), mu=st.floats(-5, 5), s=st.floats(-30, 30))
def test_stable_reduces_to_normal(var, mu, s):
    assert abs(cf_eval(stable(2.0, 0.0, mu, var / 2), s) - cf_eval(normal(mu, var), s)) <= 1e-12


@given(g=st.floats(0.01, 10), mu=st.floats(-5, 5), s=st.floats(-30, 30))
def test_stable_reduces_to_cauchy(g, mu, s):
    assert abs(cf_eval(stable(1.0, 0.0, mu, g), s) - cf_eval(cauchy(mu, g), s)) <= 1e-12


@pytest.mark.parametrize("spec", [normal(), cauchy(), stable(1.3, 0.5, 0, 1)], ids=str)
def test_modulus_strictly_decreasing(spec):
    s = np.linspace(0, 20, 400)
    assert np.all(np.diff(np.abs(cf_eval(spec, s))) < 0)


@pytest.mark.parametrize("spec", LAWS, ids=lambda s: s.describe())
def test_log_abs_cf(spec):
    s = np.linspace(0.01, 6, 50)
    assert np.allclose(log_abs_cf(spec, s), np.log(np.abs(cf_eval(spec, s))), atol=1e-12)


def test_log_abs_cf_no_underflow_for_normal():
    assert log_abs_cf(normal(), 100.0) == pytest.approx(-5000.0)


def test_riemann_lebesgue():
    for spec in (normal(), uniform(), exponential(), stable(1.2, 0.3, 0, 1)):
        assert abs(cf_eval(spec, 1e4)) < 1e-3


# --- densities ----------------------------------------------------------------


def test_pdf_reference_values():
    assert pdf_eval(normal(), 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)
    assert pdf_eval(cauchy(), 0.0) == pytest.approx(1 / math.pi, rel=1e-15)
    assert pdf_eval(uniform(), 2.0) == 0.0
    assert pdf_eval(exponential(3.0), -1.0) == 0.0


@pytest.mark.parametrize(
    "spec,lo,hi",
    [(normal(1, 2), -np.inf, np.inf), (cauchy(0, 2), -np.inf, np.inf), (uniform(-1, 3), -1, 3), (exponential(2), 0, np.inf)],
    ids=str,
)
def test_pdf_normalised(spec, lo, hi):
    assert integrate.quad(lambda x: pdf_eval(spec, x), lo, hi, limit=200)[0] == pytest.approx(1.0, abs=1e-6)


def test_stable_pdf_normalised_numerically():
    spec = stable(1.5, 0.5, 0.2, 1.0)
    # tails ~ |x|^{-2.5}; the mass beyond +-200 is below 1e-3
    mass = integrate.quad(lambda x: pdf_eval(spec, x), -200, 200, limit=400, points=[0.0])[0]
    assert mass == pytest.approx(1.0, abs=2e-3)


@pytest.mark.parametrize("r,beta,mu,c", [(1.5, 0.5, 0.2, 1.0), (0.8, -0.3, 0.0, 0.7), (1.8, 1.0, -1.0, 0.4)])
def test_stable_pdf_matches_scipy(r, beta, mu, c):
    # scipy S1 form: exp(i mu s - |sigma s|^r (1 - i beta' sign(s) tan(pi r / 2)))
    ref = stats.levy_stable(r, -beta, loc=mu, scale=c ** (1 / r))
    ref.dist.parameterization = "S1"
    x = np.array([-2.0, -0.3, 0.0, 0.9, 3.0])
    assert np.allclose(pdf_eval(stable(r, beta, mu, c), x), ref.pdf(x), rtol=1e-6, atol=1e-9)


def test_stable_pdf_reductions():
    x = np.linspace(-4, 4, 9)
    assert np.allclose(pdf_eval(stable(2.0, 0.3, 1.0, 0.5), x), pdf_eval(normal(1.0, 1.0), x), atol=1e-15)
    assert np.allclose(pdf_eval(stable(1.0, 0.0, 0.0, 2.0), x), pdf_eval(cauchy(0.0, 2.0), x), atol=1e-15)


# --- sampling -----------------------------------------------------------------


def test_transform_reference_points():
    assert transform_uniforms(cauchy(), 0.5) == pytest.approx(0.0, abs=1e-16)
    assert transform_uniforms(exponential(1.0), 1 - math.exp(-1)) == pytest.approx(1.0, rel=1e-14)
    assert transform_uniforms(uniform(2, 4), 0.25) == pytest.approx(2.5)
    with pytest.raises(ValueError):
        transform_uniforms(normal(), 0.5)


def test_sample_is_counter_based():
    spec = cauchy()
    block = sample_block(spec, 11, 0, 200)
    for k in (200, 1, 57):  # any call order
        assert sample(spec, 11, k) == block[k - 1]
    assert np.array_equal(sample_block(spec, 11, 50, 10), block[50:60])
    with pytest.raises(ValueError):
        sample(spec, 11, 0)


def test_normal_stream_mean():
    M = 100_000
    mu, var = 0.7, 2.0
    x = sample_block(normal(mu, var), 5, 0, M)
    assert abs(x.mean() - mu) < 4 * math.sqrt(var / M)


@pytest.mark.parametrize("spec,dist", [(normal(0.5, 2.0), stats.norm(0.5, math.sqrt(2))), (cauchy(1, 0.5), stats.cauchy(1, 0.5)), (uniform(-1, 2), stats.uniform(-1, 3)), (exponential(2.0), stats.expon(scale=0.5))], ids=str)
def test_samples_follow_law(spec, dist):
    x = sample_block(spec, 1, 0, 20_000)
    assert stats.kstest(x, dist.cdf).pvalue > 1e-3


@pytest.mark.parametrize("spec", [stable(1.5, 0.6, 0.3, 0.8), stable(0.8, -0.5, 0, 1), stable(1.0, 0.7, 0.2, 1.3), stable(1.0, -1.0, 0, 0.5)], ids=str)
def test_stable_samples_match_cf(spec):
    M = 100_000
    x = sample_block(spec, 2, 0, M)
    s = np.array([0.2, 0.7, 1.5])
    err = np.abs(empirical_cf(x, s) - cf_eval(spec, s))
    assert np.all(err < 5 / math.sqrt(M))


def test_empirical_cf_rate():
    spec = normal()
    errs = []
    for M in (100, 10_000):
        e = [abs(empirical_cf(sample_block(spec, seed, 0, M), 1.0) - cf_eval(spec, 1.0)) for seed in range(20)]
        errs.append(np.sqrt(np.mean(np.square(e))))
    assert errs[1] / errs[0] == pytest.approx(0.1, rel=0.5)


# --- parameters -----------------------------------------------------------------


@pytest.mark.parametrize(
    "bad",
    [
        lambda: normal(0, 0),
        lambda: cauchy(0, -1),
        lambda: stable(2.5),
        lambda: stable(1.5, 1.2),
        lambda: stable(1.5, 0, 0, 0),
        lambda: uniform(1, 1),
        lambda: exponential(0),
        lambda: normal(float("nan")),
        lambda: DistributionSpec("normal", {"sigma": 1}),
        lambda: DistributionSpec("gamma"),
    ],
)
def test_parameter_errors(bad):
    with pytest.raises(ParameterError):
        bad()


def test_spec_defaults_and_family_names():
    spec = DistributionSpec("Cauchy")
    assert spec.family is Family.CAUCHY and spec["scale"] == 1.0
    assert DistributionSpec(Family.STABLE)["stability"] == 2.0


# --- hypothesis (H) -------------------------------------------------------------


def test_normal_and_cauchy_certificates_verify():
    for spec, cert in ((normal(), HypothesisHCertificate(0.5, 2, 2)), (cauchy(), HypothesisHCertificate(1, 1, 1))):
        out = check_hypothesis_H(spec, cert)
        assert out.verified and out.max_violation <= 1e-9
        assert out.skipped == 0


def test_uniform_fails_with_located_triple():
    out = check_hypothesis_H(uniform(), HypothesisHCertificate(0.5, 2, 2), lam_max=4 * math.pi)
    assert not out.verified
    lam, t1, t2 = out.worst
    # the located triple violates the inequality when re-evaluated directly
    lhs = abs(cf_eval(uniform(), lam * t2))
    rhs = math.exp(-0.5 * lam**2 * (t2 - t1) ** 2) * abs(cf_eval(uniform(), lam * t1))
    assert lhs > rhs


@given(c=st.floats(0.05, 5), r=st.floats(0.6, 2.0))
def test_known_stable_certificates_verify(c, r):
    spec = stable(r, 0.3, 0.0, c)
    cert = known_certificate(spec)
    assert check_hypothesis_H(spec, cert, lam_max=20, n_lam=32, n_t2=32, n_t1=16).verified


def test_certificate_too_strong_fails():
    assert not check_hypothesis_H(normal(), HypothesisHCertificate(2.0, 2, 2), n_lam=32, n_t2=32, n_t1=8).verified


def test_known_certificate_values():
    assert known_certificate(normal(0, 3)) == HypothesisHCertificate(1.5, 2, 2)
    assert known_certificate(cauchy(0, 2)) == HypothesisHCertificate(2, 1, 1)
    assert known_certificate(uniform()) is None
    assert known_certificate(stable(0.4)) is None
    assert known_certificate(normal()).cost_exponent == pytest.approx(2 / 3)
    assert known_certificate(cauchy()).cost_exponent == 1.0


def test_certificate_validation():
    with pytest.raises(ParameterError):
        HypothesisHCertificate(1.0, 0.5, 1.0)
    with pytest.raises(ValueError):
        check_hypothesis_H(normal(), HypothesisHCertificate(0.5, 2, 2), lam_max=0)
