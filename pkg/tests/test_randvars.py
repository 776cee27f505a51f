import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from pddtopo import randvars as rvs
from pddtopo.randvars import Kind, RandomVector


def _quad_moment(v, r):
    return integrate.quad(lambda t: t**r * v.pdf(t), v.lo, v.hi, epsabs=1e-13, epsrel=1e-12, limit=200)[0]


@pytest.mark.parametrize("name", ["uniform", "inverse_uniform", "beta", "truncated_gaussian"])
def test_pdf_integrates_to_one_and_matches_cdf(four_kinds, name):
    v = four_kinds[name]
    total = integrate.quad(v.pdf, v.lo, v.hi)[0]
    assert total == pytest.approx(1.0, abs=1e-10)
    x = np.linspace(v.lo, v.hi, 7)
    partial = [integrate.quad(v.pdf, v.lo, t)[0] for t in x]
    np.testing.assert_allclose(v.cdf(x), partial, atol=1e-10)


@pytest.mark.parametrize("name", ["uniform", "inverse_uniform", "beta", "truncated_gaussian"])
def test_ppf_inverts_cdf(four_kinds, name):
    v = four_kinds[name]
    q = np.linspace(0.01, 0.99, 11)
    np.testing.assert_allclose(v.cdf(v.ppf(q)), q, atol=1e-10)


@pytest.mark.parametrize("name", ["uniform", "inverse_uniform", "beta", "truncated_gaussian"])
def test_raw_moments_against_quadrature(four_kinds, name):
    v = four_kinds[name]
    for r in range(9):
        assert v.raw_moment(r) == pytest.approx(_quad_moment(v, r), rel=1e-11, abs=1e-13)


def test_inverse_uniform_density_is_four_over_x_squared():
    v = rvs.inverse_uniform(2.0, 4.0)
    x = np.array([2.0, 2.5, 3.7, 4.0])
    np.testing.assert_allclose(v.pdf(x), 4.0 / x**2)
    assert v.mean == pytest.approx(4.0 * math.log(2.0))


def test_beta_from_mean_cv_is_beta44_on_three_sigma():
    v = rvs.beta_from_mean_cv(1e6, 0.1)
    assert v.kind is Kind.FOUR_PARAM_BETA
    assert v.params == (4.0, 4.0)
    assert (v.lo, v.hi) == pytest.approx((7e5, 1.3e6))
    assert v.mean == pytest.approx(1e6)
    assert v.std == pytest.approx(1e5, rel=1e-12)
    ref = stats.beta(4, 4, loc=7e5, scale=6e5)
    assert v.raw_moment(3) == pytest.approx(ref.moment(3), rel=1e-12)


def test_truncated_gaussian_moments_against_scipy():
    v = rvs.truncated_gaussian(2.0, 0.5, 0.4)
    ref = stats.truncnorm(-0.8, 0.8, loc=2.0, scale=0.5)
    for r in range(1, 6):
        assert v.raw_moment(r) == pytest.approx(ref.moment(r), rel=1e-10)


@pytest.mark.parametrize("name", ["uniform", "inverse_uniform", "beta", "truncated_gaussian"])
def test_sampling_matches_distribution(four_kinds, name):
    v = four_kinds[name]
    x = v.sample(np.random.default_rng(3), 200_000)
    assert np.all((x >= v.lo) & (x <= v.hi))
    assert stats.kstest(x, v.cdf).pvalue > 1e-3


def test_invalid_parameters_rejected():
    with pytest.raises(ValueError):
        rvs.uniform(1.0, 1.0)
    with pytest.raises(ValueError):
        rvs.inverse_uniform(-1.0, 2.0)
    with pytest.raises(ValueError):
        rvs.beta_from_mean_cv(1.0, 0.0)
    with pytest.raises(ValueError):
        rvs.truncated_gaussian(0.0, -1.0, 1.0)


def test_vector_roundtrip_and_blocks():
    rv = RandomVector((rvs.uniform(0, 1), rvs.beta_from_mean_cv(2.0, 0.1), rvs.truncated_gaussian(0, 1, 2)))
    assert RandomVector.from_list(rv.to_list()) == rv
    a = rv.sample_block(5, 3, 100)
    b = rv.sample_block(5, 3, 100)
    c = rv.sample_block(5, 4, 100)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert a.shape == (100, 3)


@settings(max_examples=40, deadline=None)
@given(lo=st.floats(-5, 5), width=st.floats(0.1, 5), r=st.integers(0, 6))
def test_uniform_moment_property(lo, width, r):
    v = rvs.uniform(lo, lo + width)
    expected = ((lo + width) ** (r + 1) - lo ** (r + 1)) / ((r + 1) * width)
    assert v.raw_moment(r) == pytest.approx(expected, rel=1e-9, abs=1e-9)
