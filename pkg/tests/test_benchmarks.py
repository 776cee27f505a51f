import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from pddtopo import benchmarks as B
from pddtopo import randvars as rvs
from pddtopo.orthopoly import gauss_rule
from pddtopo.randvars import RandomVector
from pddtopo.topo import asymptotic_ring_check

PI = math.pi


def test_disk_compliance_values():
    assert B.disk_compliance(2.0, 1.0, 0.2) == pytest.approx(0.8 * PI)
    assert B.disk_compliance(2.0, 0.0, 0.2) == 0.0
    assert B.disk_compliance(3.0, 2.4, 0.2) == pytest.approx(4 * B.disk_compliance(3.0, 1.2, 0.2))


def test_disk_ring_reduces_and_diverges():
    assert B.disk_ring_compliance(2.0, 1.3, 0.2, 0.0) == B.disk_compliance(2.0, 1.3, 0.2)
    q = (B.disk_ring_compliance(2.0, 1.0, 0.2, 1e-3) - B.disk_compliance(2.0, 1.0, 0.2)) / 1e-6
    assert q == pytest.approx(2 * PI, rel=1e-5)
    vals = [B.disk_ring_compliance(2.0, 1.0, 0.2, r) for r in (0.5, 0.9, 0.99, 0.999)]
    assert vals == sorted(vals) and vals[-1] > 1e3


def test_disk_pdf_moments_match_closed_forms():
    a = 0.8 * PI
    ref = B.reference_values_example1()
    pts = [a, 2 * a]
    assert B.disk_pdf_compliance(a / 2 - 1e-9) == 0.0
    for r, expected in ((0, 1.0), (1, ref.m1), (2, ref.m2), (3, ref.m3)):
        val = integrate.quad(lambda y: y**r * B.disk_pdf_compliance(y), a / 2, 4 * a, points=pts,
                             epsabs=1e-14, epsrel=1e-13)[0]
        assert val == pytest.approx(expected, rel=1e-10)


def test_disk_cdf_is_integral_of_pdf():
    a = 0.8 * PI
    for y in np.linspace(a / 2, 4 * a, 17):
        val = integrate.quad(B.disk_pdf_compliance, a / 2, y, points=[p for p in (a, 2 * a) if p < y])[0]
        assert float(B.disk_cdf_compliance(y)) == pytest.approx(val, abs=1e-10)


def test_disk_moments_by_input_quadrature():
    # independent route: integrate y(E, p0) against the input densities
    rv = B.disk_uniform_inputs()
    ref = B.reference_values_example1()
    g = [gauss_rule(v, 30) for v in rv]
    E, P = np.meshgrid(g[0].nodes, g[1].nodes, indexing="ij")
    W = np.outer(g[0].weights, g[1].weights)
    y, z = B.disk_compliance(E, P, 0.2), B.disk_dt_center(E, P)
    assert np.sum(W * y**3) == pytest.approx(ref.m3, rel=1e-13)
    assert np.sum(W * 3 * y**2 * z) == pytest.approx(ref.dt_m3, rel=1e-13)
    assert np.sum(W * 2 * y * z) == pytest.approx(ref.dt_m2, rel=1e-13)


def test_reference_values_example1():
    ref = B.reference_values_example1(0.2)
    assert ref.m1 == pytest.approx(1.4 * PI)
    assert ref.m1 == pytest.approx(4.39822972, rel=1e-8)
    assert ref.m3 == pytest.approx(135.009, rel=1e-5)
    assert ref.dt_m1 == pytest.approx(10.99557, rel=1e-6)
    assert ref.dt_m2 == pytest.approx(114.2243, rel=1e-6)
    assert ref.dt_m3 == pytest.approx(1012.57, rel=1e-5)
    assert ref.reliability[7.5]["pf"] == pytest.approx(1 - (4 * math.sqrt(6 * PI) - 2.4 * PI - 7.5) / (0.8 * PI))
    assert ref.reliability[7.5]["pf"] == pytest.approx(0.074275, abs=5e-6)
    assert ref.reliability[7.5]["dt_pf"] == pytest.approx((4 * math.sqrt(6 * PI) - 15) / (0.64 * PI))
    assert ref.reliability[7.0]["dt_pf"] == pytest.approx((4 * math.sqrt(5.6 * PI) - 14) / (0.64 * PI))
    assert ref.reliability[7.0]["dt_pf"] == pytest.approx(1.3815, abs=1e-4)


def test_dt_failure_probability_is_derivative_of_exact_pf():
    # P_F of y (1 + kappa t) differentiated numerically in t
    kappa, t, h = 2.0 / 0.8, 7.5, 1e-6
    pf = lambda e: B.disk_failure_probability(t / (1 + kappa * e))
    assert (pf(h) - pf(-h)) / (2 * h) == pytest.approx(B.disk_dt_failure_probability(t), rel=1e-6)


def test_trig_compliance_special_values():
    assert B.trig_compliance(B.HarmonicPressure(1.3), 2.0, 0.2) == pytest.approx(B.disk_compliance(2.0, 1.3, 0.2))
    assert B.trig_compliance(B.HarmonicPressure(0.0, (1.0,), (0.0,)), 1.0, 0.2) == pytest.approx(3.2 / 3 * PI)


def test_trig_ring_reductions_and_limit():
    p0 = B.HarmonicPressure(1.3)
    for rho in (0.01, 0.3, 0.7):
        assert B.trig_ring_compliance(p0, 2.0, 0.2, rho) == pytest.approx(B.disk_ring_compliance(2.0, 1.3, 0.2, rho),
                                                                           rel=1e-14)
    p = B.HarmonicPressure(1.0, (1.0,), (1.0,))
    q = (B.trig_ring_compliance(p, 1.0, 0.2, 1e-3) - B.trig_compliance(p, 1.0, 0.2)) / 1e-6
    assert q == pytest.approx(20 * PI, rel=1e-5)
    p25 = B.HarmonicPressure(1.0, tuple(range(2, 27)), tuple(range(2, 27)))
    y = B.trig_compliance(p25, 1e6, 0.2)
    assert abs(B.trig_ring_compliance(p25, 1e6, 0.2, 1e-8) - y) < 1e-12 * y
    with pytest.raises(ValueError):
        B.trig_ring_compliance(p, 1.0, 0.2, 0.0)


def test_trig_dt_center_ignores_higher_harmonics():
    p = B.HarmonicPressure(1.0, (1.0, 5.0, 7.0), (1.0, -3.0, 2.0))
    assert B.trig_dt_center(p, 1.0) == pytest.approx(20 * PI)
    assert B.trig_dt_center(B.HarmonicPressure(0.0, (0.0,), (0.0,)), 1.0) == 0.0
    q = B.HarmonicPressure(1.0, (1.0, -2.0, 0.1), (1.0, 9.0, 4.0))
    assert B.trig_dt_center(q, 1.0) == B.trig_dt_center(p, 1.0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), K=st.integers(1, 5))
def test_trig_compliance_positive(seed, K):
    rng = np.random.default_rng(seed)
    p = B.HarmonicPressure(rng.normal(), tuple(rng.normal(size=K)), tuple(rng.normal(size=K)))
    assert B.trig_compliance(p, rng.uniform(0.1, 10), rng.uniform(-0.9, 0.49)) > 0


@pytest.mark.parametrize("K", [1, 3, 25])
def test_ring_convergence_for_trig_disk(K):
    rng = np.random.default_rng(K)
    p = B.HarmonicPressure(rng.uniform(1, 2), tuple(rng.uniform(1, 3, K)), tuple(rng.uniform(1, 3, K)))
    E, nu = 3.0, 0.25
    rep = asymptotic_ring_check(B.trig_compliance(p, E, nu), lambda r: B.trig_ring_compliance(p, E, nu, r),
                                B.trig_dt_center(p, E))
    assert rep.converged


def test_oracles_vectorised_and_consistent():
    o = B.DiskTrigOracle(K=2)
    x = o.default_inputs().sample(np.random.default_rng(0), 5)
    y, z = o(x)
    for row, yi, zi in zip(x, y, z):
        p = B.HarmonicPressure(row[0], tuple(row[1:3]), tuple(row[3:5]))
        assert yi == pytest.approx(B.trig_compliance(p, row[5], row[6]), rel=1e-14)
        assert zi == pytest.approx(B.trig_dt_center(p, row[5]), rel=1e-14)
    with pytest.raises(ValueError):
        o(x[:, :4])
    with pytest.raises(KeyError):
        B.make_oracle("no_such_oracle")


def _tensor_moments_small_k(rv, K):
    """Brute-force tensor Gauss expectations over all 2K+3 inputs (feasible for K <= 1).

    Six nodes are exact for the polynomial inputs; 1/E^3 needs a longer rule.
    """
    o = B.DiskTrigOracle(K)
    rules = [gauss_rule(v, 24 if i == 2 * K + 1 else 6) for i, v in enumerate(rv)]
    X = np.array(list(itertools.product(*[r.nodes for r in rules])))
    W = np.prod(np.array(list(itertools.product(*[r.weights for r in rules]))), axis=1)
    y, z = o(X)
    return [W @ y, W @ y**2, W @ y**3], [W @ z, W @ (2 * y * z), W @ (3 * y**2 * z)]


def test_exact_moments_example2_against_tensor_quadrature():
    rv = B.disk_trig_inputs(K=1, E_mean=2.0, E_cv=0.15)
    ref = B.exact_moments_example2(rv, K=1)
    m, dt = _tensor_moments_small_k(rv, 1)
    np.testing.assert_allclose(ref.moments, m, rtol=1e-11)
    np.testing.assert_allclose(ref.sensitivities, dt, rtol=1e-11)


def test_exact_moments_example2_with_mixed_kinds():
    rv = RandomVector((rvs.uniform(0.5, 1.5), rvs.truncated_gaussian(1.0, 0.3, 0.6), rvs.inverse_uniform(1.0, 2.0),
                       rvs.uniform(1.0, 3.0), rvs.uniform(0.1, 0.3)))
    ref = B.exact_moments_example2(rv, K=1)
    m, dt = _tensor_moments_small_k(rv, 1)
    np.testing.assert_allclose(ref.moments, m, rtol=1e-10)
    np.testing.assert_allclose(ref.sensitivities, dt, rtol=1e-10)


def test_exact_moments_example2_collapses_without_spread():
    K = 3
    rv = B.disk_trig_inputs(K, cv=1e-9, E_cv=1e-9, nu_cv=1e-9)
    ref = B.exact_moments_example2(rv, K)
    p = B.HarmonicPressure(1.0, (2.0, 3.0, 4.0), (2.0, 3.0, 4.0))
    y = B.trig_compliance(p, 1e6, 0.2)
    assert ref.m1 == pytest.approx(y, rel=1e-7)
    assert ref.m3 == pytest.approx(y**3, rel=1e-7)
    assert ref.dt_m1 == pytest.approx(B.trig_dt_center(p, 1e6), rel=1e-7)
