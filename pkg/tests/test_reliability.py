import math

import numpy as np
import pytest

from pddtopo import benchmarks as B
from pddtopo import pdd
from pddtopo import randvars as rvs
from pddtopo import reliability as R
from pddtopo.randvars import RandomVector


@pytest.fixture(scope="module")
def disk():
    o = B.DiskUniformOracle()
    rv = o.default_inputs()
    y, z, _ = pdd.paired_build(o, rv, 2, 3)
    return o, rv, y, z


def test_median_of_symmetric_linear_surrogate():
    rv = RandomVector((rvs.uniform(-1, 1),))
    s = pdd.PddSurrogate(rv, 1, 1, 0.0, {1: np.array([[1.0]])})
    res = R.failure_probability(R.FailureSpec.single(s, 0.0, "below"), rv, 1_000_000, seed=3)
    assert abs(res.estimate - 0.5) < 3 * res.stderr
    assert res.estimate == res.n_fail / res.L


@pytest.mark.parametrize("L", [10_000, 100_000, 1_000_000])
@pytest.mark.parametrize("threshold", [7.0, 7.5])
def test_exact_oracle_converges_to_closed_form(L, threshold):
    o = B.DiskUniformOracle()
    res = R.failure_probability(R.FailureSpec.single(o.response, threshold), o.default_inputs(), L, seed=L + 1)
    exact = B.disk_failure_probability(threshold)
    assert abs(res.estimate - exact) < 3 * math.sqrt(exact * (1 - exact) / L)


def test_union_and_intersection_with_trivial_partner_are_bit_exact(disk):
    _, rv, y, _ = disk
    never = pdd.PddSurrogate(rv, 2, 3, -1.0, {})
    always = pdd.PddSurrogate(rv, 2, 3, 1e9, {})
    single = R.failure_probability(R.FailureSpec.single(y, 7.5), rv, 200_000, seed=9)
    union = R.failure_probability(R.FailureSpec((y, never), (R.LimitState(7.5), R.LimitState(0.0)), "union"),
                                  rv, 200_000, seed=9)
    inter = R.failure_probability(R.FailureSpec((y, always), (R.LimitState(7.5), R.LimitState(0.0)),
                                                "intersection"), rv, 200_000, seed=9)
    assert single == union == inter


def test_failure_spec_validation():
    with pytest.raises(ValueError):
        R.FailureSpec((), ())
    with pytest.raises(ValueError):
        R.FailureSpec((1, 2), (R.LimitState(0.0), R.LimitState(1.0)), "single")
    with pytest.raises(ValueError):
        R.LimitState(float("inf"))
    with pytest.raises(ValueError):
        R.failure_probability(R.FailureSpec.single(lambda x: x[:, 0], 0.0), RandomVector((rvs.uniform(0, 1),)), 0)


def test_deterministic_and_seed_dependent(disk):
    _, rv, y, _ = disk
    spec = R.FailureSpec.single(y, 7.0)
    a = R.failure_probability(spec, rv, 150_000, seed=1)
    b = R.failure_probability(spec, rv, 150_000, seed=1)
    c = R.failure_probability(spec, rv, 150_000, seed=2)
    assert a == b and a.estimate != c.estimate


def test_bit_reproducible_across_worker_counts(disk):
    _, rv, y, z = disk
    L = 5 * 65536 + 123
    spec = R.FailureSpec.single(y, 7.5)
    ref = R.failure_probability(spec, rv, L, seed=4, workers=1)
    fd_ref = R.dt_failure_probability(y, z, R.LimitState(7.5), rv, 0.05, 2, L, seed=4, workers=1)
    cdf_ref = R.cdf_curve(y, rv, L, 4, np.linspace(2, 9, 15), workers=1)
    for w in (2, 3, 8):
        assert R.failure_probability(spec, rv, L, seed=4, workers=w) == ref
        assert R.dt_failure_probability(y, z, R.LimitState(7.5), rv, 0.05, 2, L, seed=4, workers=w) == fd_ref
        assert R.cdf_curve(y, rv, L, 4, np.linspace(2, 9, 15), workers=w) == cdf_ref


def test_zero_derivative_gives_exact_zero(disk):
    _, rv, y, _ = disk
    zero = pdd.PddSurrogate(rv, 2, 3, 0.0, {})
    res = R.dt_failure_probability(y, zero, R.LimitState(7.5), rv, 0.05, 2, 100_000, seed=5)
    assert res.estimate == 0.0 and res.stderr == 0.0


def test_nonpositive_rho_rejected(disk):
    _, rv, y, z = disk
    with pytest.raises(ValueError):
        R.dt_failure_probability(y, z, R.LimitState(7.5), rv, 0.0, 2, 1000, seed=5)
    with pytest.raises(ValueError):
        R.crude_mcs_fd(y, lambda x, r: y(x), rv, -0.1, R.LimitState(7.5), 1000)


def test_crude_fd_with_identical_oracles_is_zero():
    o = B.DiskUniformOracle()
    res = R.crude_mcs_fd(o.response, lambda x, rho: o.response(x), o.default_inputs(), 0.05,
                         R.LimitState(7.5), 100_000, seed=1)
    assert res.estimate == 0.0


def test_crude_fd_matches_closed_form_limit():
    o = B.DiskUniformOracle()
    res = R.crude_mcs_fd(o.response, o.ring, o.default_inputs(), 0.05, R.LimitState(7.5), 1_000_000, seed=8)
    exact = B.disk_dt_failure_probability(7.5)
    # the rho = 0.05 finite difference carries an O(rho^2) bias on top of sampling noise
    assert abs(res.estimate - exact) < 3 * res.stderr + 0.01 * exact


def test_common_random_numbers_reduce_variance(disk):
    _, rv, y, z = disk
    L, rho = 20_000, 0.05
    ls = R.LimitState(7.5)
    crn, indep = [], []
    for seed in range(20):
        crn.append(R.dt_failure_probability(y, z, ls, rv, rho, 2, L, seed).estimate)
        base = R.failure_probability(R.FailureSpec.single(y, 7.5), rv, L, seed).estimate
        zz = z.scaled(rho**2)
        pert_s = pdd.PddSurrogate(rv, 2, 3, y.constant + zz.constant,
                                  {k: y.blocks[k] + zz.blocks[k] for k in y.blocks})
        pert = R.failure_probability(R.FailureSpec.single(pert_s, 7.5), rv, L, seed + 1000).estimate
        indep.append((pert - base) / rho**2)
    assert np.var(crn) <= np.var(indep)


def test_sign_when_perturbation_raises_response(disk):
    _, rv, y, z = disk
    x = rv.sample(np.random.default_rng(0), 1000)
    assert np.all(z(x) > 0)
    res = R.dt_failure_probability(y, z, R.LimitState(7.0), rv, 0.05, 2, 200_000, seed=6)
    assert res.estimate >= 0
    below = R.dt_failure_probability(y, z, R.LimitState(3.0, "below"), rv, 0.05, 2, 200_000, seed=6)
    assert below.estimate <= 0


def test_cdf_curve_edges_and_monotonicity(disk):
    _, rv, y, _ = disk
    grid = np.array([-1.0, 1.0, 3.0, 5.0, 7.0, 100.0])
    cdf = R.cdf_curve(y, rv, 100_000, 2, grid)
    values = [f for _, f in cdf]
    assert values[0] == 0.0 and values[-1] == 1.0
    assert values == sorted(values)
    assert [g for g, _ in cdf] == grid.tolist()


def test_exact_cdf_at_2a_matches_closed_form():
    o = B.DiskUniformOracle()
    y0 = 2 * math.pi * 0.8
    L = 400_000
    (_, f), = R.cdf_curve(o.response, o.default_inputs(), L, 13, [y0])
    exact = float(B.disk_cdf_compliance(y0))
    assert exact == pytest.approx(3 - 2 * math.sqrt(2) + (4 - 2 * math.sqrt(2)) * (math.sqrt(2) - 1))
    assert abs(f - exact) < 3 * math.sqrt(exact * (1 - exact) / L)
