import math

import numpy as np
import pytest
from scipy import integrate, stats

from predbayes import dists
from predbayes.dists import (
    Beta,
    BetaPrime,
    Gamma,
    InverseGamma,
    Normal,
    RngStream,
    kde,
    logpdf,
    logpdf_phi_reference,
    phi_reference_from_uniform,
    sample,
    sample_many,
    sample_phi_reference,
)
from predbayes.errors import DegenerateSampleError, ParameterDomainError


def test_rng_stream_reproducible():
    a = [sample(Normal(0, 1), RngStream(5, 3)) for _ in range(4)]
    b = [sample(Normal(0, 1), RngStream(5, 3)) for _ in range(4)]
    assert a[0] == b[0]
    # within a stream, consecutive draws advance
    r = RngStream(5, 3)
    assert sample(Normal(0, 1), r) != sample(Normal(0, 1), r)


def test_rng_streams_independent():
    x = sample_many(Normal(0, 1), RngStream(5, 0), 2000)
    y = sample_many(Normal(0, 1), RngStream(5, 1), 2000)
    assert abs(np.corrcoef(x, y)[0, 1]) < 0.08


def test_rng_child_reproducible():
    a = sample(Normal(0, 1), RngStream(5, 0).child(7))
    b = sample(Normal(0, 1), RngStream(5, 0).child(7))
    c = sample(Normal(0, 1), RngStream(5, 0).child(8))
    assert a == b and a != c


def test_normal_sample_deterministic():
    assert sample(Normal(0, 1), RngStream(11, 0)) == sample(Normal(0, 1), RngStream(11, 0))


def test_betaprime_transform_is_beta():
    # If X ~ BetaPrime(a, b) then X / (1 + X) ~ Beta(a, b).
    x = sample_many(BetaPrime(2.0, 3.0), RngStream(21, 0), 100_000)
    u = x / (1.0 + x)
    p = stats.kstest(u, stats.beta(2.0, 3.0).cdf).pvalue
    assert p > 0.01


def test_beta_betaprime_two_sample_identity():
    # Sigma = R2 / (1 - R2) with R2 ~ Beta(a, b) matches BetaPrime(a, b).
    a, b = 0.5, 1.0
    r2 = sample_many(Beta(a, b), RngStream(22, 0), 100_000)
    sigma_from_beta = r2 / (1.0 - r2)
    sigma_direct = sample_many(BetaPrime(a, b), RngStream(22, 1), 100_000)
    p = stats.ks_2samp(sigma_from_beta, sigma_direct).pvalue
    assert p > 0.01


def test_inverse_gamma_mean():
    x = sample_many(InverseGamma(4.0, 0.06), RngStream(23, 0), 1_000_000)
    assert abs(x.mean() - 0.02) / 0.02 < 0.01


_MOMENT_SPECS = [
    (Normal(0.3, 2.0), 0.3, math.sqrt(2.0)),
    (Gamma(4.0, 2.0), 2.0, 1.0),
    (Gamma(0.1, 1.0), 0.1, math.sqrt(0.1)),
    (InverseGamma(4.0, 0.06), 0.02, 0.06 / 3 / math.sqrt(2.0)),
    (Beta(2.0, 3.0), 0.4, math.sqrt(0.04)),
    (BetaPrime(2.0, 4.0), 2.0 / 3, math.sqrt((2 * (2 + 4 - 1)) / ((4 - 2) * (4 - 1) ** 2))),
]


@pytest.mark.parametrize("spec,mean,sd", _MOMENT_SPECS,
                         ids=lambda v: getattr(type(v), "__name__", str(v)))
def test_sample_mean_matches_analytic(spec, mean, sd):
    n = 1_000_000
    x = sample_many(spec, RngStream(24, hash(str(spec)) % 1000), n)
    assert abs(x.mean() - mean) < 3.0 * sd / math.sqrt(n)


def test_sample_scalar_matches_support():
    r = RngStream(25, 0)
    for _ in range(200):
        assert 0.0 < sample(Beta(0.5, 1.0), r) < 1.0
        assert sample(Gamma(0.1, 2.0), r) > 0.0
        assert sample(InverseGamma(0.5, 1.0), r) > 0.0
        assert sample(BetaPrime(0.1, 1.0), r) > 0.0


def test_logpdf_normal_standard_at_zero():
    assert logpdf(Normal(0.0, 1.0), 0.0) == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-12)


def test_logpdf_uniform_beta():
    assert logpdf(Beta(1.0, 1.0), 0.3) == pytest.approx(0.0, abs=1e-12)


def test_logpdf_inverse_gamma_against_quadrature_oracle():
    # Normalize the bare kernel by numeric integration and compare.
    a, s = 2.5, 0.03

    def kernel(x):
        return x ** (-(a + 1.0)) * math.exp(-s / x)

    z, _ = integrate.quad(kernel, 0, np.inf)
    oracle = math.log(kernel(0.02) / z)
    assert logpdf(InverseGamma(a, s), 0.02) == pytest.approx(oracle, abs=1e-8)


_QUAD_SPECS = [
    Normal(0.3, 2.0),
    Gamma(0.1, 2.0),
    Gamma(4.0, 0.5),
    InverseGamma(2.5, 0.03),
    InverseGamma(0.5, 1.0),
    Beta(2.0, 3.0),
    Beta(0.5, 1.0),
    BetaPrime(0.5, 2.0),
    BetaPrime(2.0, 1.0),
]


@pytest.mark.parametrize("spec", _QUAD_SPECS, ids=lambda v: repr(v))
def test_density_integrates_to_one(spec):
    if isinstance(spec, Normal):
        lo, hi = -np.inf, np.inf
    elif isinstance(spec, Beta):
        lo, hi = 0.0, 1.0
    else:
        lo, hi = 0.0, np.inf
    total, _ = integrate.quad(lambda x: math.exp(logpdf(spec, x)), lo, hi, limit=200)
    assert total == pytest.approx(1.0, abs=1e-4)


def test_logpdf_outside_support():
    assert logpdf(Gamma(2.0, 1.0), -1.0) == -math.inf
    assert logpdf(InverseGamma(2.0, 1.0), 0.0) == -math.inf
    assert logpdf(Beta(2.0, 2.0), 1.5) == -math.inf
    assert logpdf(BetaPrime(2.0, 2.0), -0.1) == -math.inf


@pytest.mark.parametrize("bad", [
    lambda: Normal(0.0, 0.0),
    lambda: Normal(0.0, math.inf),
    lambda: Gamma(-1.0, 1.0),
    lambda: Gamma(1.0, 0.0),
    lambda: InverseGamma(0.0, 1.0),
    lambda: Beta(1.0, -2.0),
    lambda: BetaPrime(0.0, 1.0),
])
def test_invalid_parameters_raise(bad):
    with pytest.raises(ParameterDomainError):
        bad()


def test_phi_reference_inverse_cdf():
    assert phi_reference_from_uniform(0.5) == pytest.approx(math.sin(math.pi / 4), abs=1e-15)
    assert phi_reference_from_uniform(0.5) == pytest.approx(0.70711, abs=5e-6)
    assert phi_reference_from_uniform(0.0) == 0.0


def test_phi_reference_cdf_oracle():
    r = RngStream(26, 0)
    draws = np.array([sample_phi_reference(r) for _ in range(100_000)])
    assert ((draws >= 0.0) & (draws < 1.0)).all()
    grid = np.sort(draws)
    ecdf = np.arange(1, len(grid) + 1) / len(grid)
    cdf = (2.0 / math.pi) * np.arcsin(grid)
    assert np.abs(ecdf - cdf).max() < 0.01


def test_logpdf_phi_reference_values():
    assert logpdf_phi_reference(0.0) == pytest.approx(math.log(2 / math.pi), abs=1e-12)
    assert logpdf_phi_reference(0.0) == pytest.approx(-0.45158, abs=5e-6)
    expected = math.log(2 / math.pi) - 0.5 * math.log(0.75)
    assert logpdf_phi_reference(0.5) == pytest.approx(expected, abs=1e-12)
    assert logpdf_phi_reference(0.5) == pytest.approx(-0.30768, abs=5e-4)
    assert logpdf_phi_reference(1.0) == -math.inf
    assert logpdf_phi_reference(-0.01) == -math.inf


def test_phi_reference_density_integrates():
    total, _ = integrate.quad(lambda x: math.exp(logpdf_phi_reference(x)), 0, 1)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_kde_symmetric_input_symmetric_output():
    draws = np.array([-2.0, -1.0, -0.5, 0.5, 1.0, 2.0])
    grid = np.linspace(-3, 3, 61)
    est = kde(draws, grid)
    assert np.abs(est - est[::-1]).max() < 1e-12


def test_kde_standard_normal_at_zero():
    draws = sample_many(Normal(0, 1), RngStream(27, 0), 100_000)
    val = kde(draws, np.array([0.0]))[0]
    assert abs(val - 0.3989423) / 0.3989423 < 0.05


def test_kde_normalization_oracle():
    draws = sample_many(Normal(0, 1), RngStream(28, 0), 20_000)
    grid = np.linspace(-6, 6, 601)
    est = kde(draws, grid)
    assert (est >= 0).all()
    assert np.trapezoid(est, grid) == pytest.approx(1.0, rel=0.02)


def test_kde_degenerate_sample():
    with pytest.raises(DegenerateSampleError):
        kde(np.ones(50), np.linspace(0, 2, 11))
    with pytest.raises(DegenerateSampleError):
        kde(np.array([1.0]), np.linspace(0, 2, 11))
