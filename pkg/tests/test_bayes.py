import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from propxl.bayes import (
    BalancedWeights,
    CededSample,
    GridSpec,
    PriorTriple,
    balanced_estimate,
    balanced_minimizer,
    ceded_density,
    log_likelihood,
    posterior_summary,
    proportional_branch_count,
    verify_balanced_bayes_equivalence,
)
from propxl.contract import ContractParams
from propxl.distributions import ClaimModel, PriorSpec
from propxl.errors import DomainError, NumericUnderflow
from propxl.harness import EXAMPLE1_DATA

BETA22 = PriorSpec("beta", (2, 2))
EXP2 = PriorSpec("exponential", (2,))


def point(v):
    return PriorSpec("pointmass", (v,))


def test_single_observation_density_value():
    m = ClaimModel.exponential(1.0)
    c = ContractParams(0.5, 1.0)
    assert math.exp(log_likelihood([0.1], m, c)) == pytest.approx(2 * math.exp(-0.2), rel=1e-14)
    assert ceded_density(0.1, m, c) == pytest.approx(2 * math.exp(-0.2), rel=1e-14)
    # upper branch: f(z + alpha M)
    assert ceded_density(0.9, m, c) == pytest.approx(math.exp(-1.4), rel=1e-14)


def test_branch_count_on_example_sample():
    c = ContractParams(0.27, 1.08)
    z = np.array(EXAMPLE1_DATA)
    assert proportional_branch_count(z, c) == 5
    assert set(z[z <= (1 - c.alpha) * c.cap_M]) == {0.453, 0.456, 0.0637, 0.145, 0.211}


@settings(max_examples=100, deadline=None)
@given(a1=st.floats(0, 0.99), a2=st.floats(0, 0.99), m1=st.floats(0.01, 20), m2=st.floats(0.01, 20))
def test_branch_count_monotone(a1, a2, m1, m2):
    z = np.array(EXAMPLE1_DATA)
    lo_a, hi_a = sorted((a1, a2))
    lo_m, hi_m = sorted((m1, m2))
    assert proportional_branch_count(z, ContractParams(hi_a, lo_m)) <= proportional_branch_count(
        z, ContractParams(lo_a, lo_m)
    )
    assert proportional_branch_count(z, ContractParams(lo_a, lo_m)) <= proportional_branch_count(
        z, ContractParams(lo_a, hi_m)
    )


def test_likelihood_is_sum_of_single_terms():
    m = ClaimModel.gamma(2.0, 1.5)
    c = ContractParams(0.3, 0.8)
    z = [0.05, 0.4, 1.2, 3.0]
    total = sum(math.log(ceded_density(v, m, c)) for v in z)
    assert log_likelihood(z, m, c) == pytest.approx(total, rel=1e-13)
    assert log_likelihood(CededSample(tuple(z)), m, c) == pytest.approx(total, rel=1e-13)


def test_likelihood_domain_errors():
    m = ClaimModel.exponential(1.0)
    with pytest.raises(DomainError):
        log_likelihood([0.1], m, ContractParams(1.0, 1.0))
    with pytest.raises(DomainError):
        log_likelihood([-0.1], m, ContractParams(0.5, 1.0))
    with pytest.raises(DomainError):
        CededSample((0.3, -1.0))


def _density_mass(model, a, m):
    c = ContractParams(a, m)
    f = lambda z: ceded_density(z, model, c)
    knot = (1 - a) * m
    low, _ = integrate.quad(f, 0.0, knot, epsabs=1e-13, epsrel=1e-11)
    high, _ = integrate.quad(f, knot, math.inf, epsabs=1e-13, epsrel=1e-11)
    return low + high


GRID5 = list(
    itertools.product((0.5, 1.0, 2.0, 4.0, 8.0), (0.0, 0.2, 0.5, 0.8, 0.95), (0.1, 0.5, 1.0, 3.0, 10.0))
)


@pytest.mark.parametrize("family", ["exponential", "weibull", "gamma"])
def test_single_observation_density_integrates_to_one(family):
    worst = 0.0
    for theta, a, m in GRID5:
        model = {
            "exponential": lambda: ClaimModel.exponential(theta),
            "weibull": lambda: ClaimModel.weibull(2.0, theta),
            "gamma": lambda: ClaimModel.gamma(3.0, theta),
        }[family]()
        worst = max(worst, abs(_density_mass(model, a, m) - 1.0))
    assert worst < 1e-5


def test_point_mass_priors_return_the_atoms():
    priors = PriorTriple(point(1.0), point(0.35), point(2.5))
    post = posterior_summary(EXAMPLE1_DATA, ClaimModel.exponential(1.0), priors)
    assert post.mean_alpha == 0.35 and post.mean_m == 2.5 and post.mean_theta == 1.0


def test_example_posterior_and_support_hull():
    priors = PriorTriple(point(1.0), BETA22, EXP2)
    post = posterior_summary(EXAMPLE1_DATA, ClaimModel.exponential(1.0), priors, GridSpec(1, 200, 200))
    lo_a, hi_a = post.bounds["alpha"]
    lo_m, hi_m = post.bounds["m"]
    assert lo_a <= post.mean_alpha <= hi_a
    assert lo_m <= post.mean_m <= hi_m
    assert 0 < post.normalization_constant < math.inf
    assert post.mean_alpha == pytest.approx(0.4107, abs=5e-4)
    assert post.mean_m == pytest.approx(0.3709, abs=5e-4)


def test_full_three_dimensional_posterior():
    priors = PriorTriple(PriorSpec("gamma", (2, 2)), BETA22, EXP2)
    post = posterior_summary(EXAMPLE1_DATA, ClaimModel.exponential(1.0), priors, GridSpec(60, 60, 60))
    assert 0 < post.mean_alpha < 1 and post.mean_m > 0 and post.mean_theta > 0


def test_chunking_does_not_change_the_result():
    priors = PriorTriple(PriorSpec("gamma", (2, 2)), BETA22, EXP2)
    model = ClaimModel.exponential(1.0)
    a = posterior_summary(EXAMPLE1_DATA, model, priors, GridSpec(24, 30, 30), chunk=1)
    b = posterior_summary(EXAMPLE1_DATA, model, priors, GridSpec(24, 30, 30), chunk=24)
    assert a.mean_alpha == pytest.approx(b.mean_alpha, rel=1e-13)
    assert a.mean_m == pytest.approx(b.mean_m, rel=1e-13)


def test_grid_doubling_is_a_contraction_once_resolved():
    priors = PriorTriple(point(1.0), BETA22, EXP2)
    model = ClaimModel.exponential(1.0)
    means = [
        np.array(
            [(p := posterior_summary(EXAMPLE1_DATA, model, priors, GridSpec(1, n, n))).mean_alpha, p.mean_m]
        )
        for n in (400, 800, 1600)
    ]
    d1 = np.abs(means[1] - means[0])
    d2 = np.abs(means[2] - means[1])
    assert np.all(d1 < 1e-3)
    assert np.all(d2 < 0.5 * d1)


def test_posterior_underflow_is_reported():
    # (z / scale)^4 overflows, so every cell has zero likelihood
    priors = PriorTriple(point(1e-3), BETA22, point(1.0))
    model = ClaimModel.weibull(4.0, 1e-3)
    with pytest.raises(NumericUnderflow):
        posterior_summary([1e90, 2e90], model, priors, GridSpec(1, 20, 1))


# -------------------------------------------------------- balanced estimator


def test_balanced_weights_validation():
    with pytest.raises(DomainError):
        BalancedWeights(0.5, 0.5)
    with pytest.raises(DomainError):
        BalancedWeights(-0.1, 0.2)
    w = BalancedWeights(0.1, 0.9, closed=True)
    assert w.residual == 0.0
    with pytest.raises(DomainError):
        BalancedWeights(0.2, 0.9, closed=True)


def test_balanced_estimate_table_rows():
    t0, t1 = ContractParams(0.27, 1.08), ContractParams(0.38, 37.001)
    est = balanced_estimate(BalancedWeights(0.1, 0.1), t0, t1, (0.6, 0.78))
    assert est.alpha == pytest.approx(0.545, abs=1e-12)
    assert est.cap_M == pytest.approx(4.4321, abs=1e-12)
    est = balanced_estimate(BalancedWeights(0.9, 0.1, closed=True), t0, t1, (0.6, 0.78))
    assert (est.alpha, est.cap_M) == pytest.approx((0.281, 4.6721), abs=1e-12)
    est = balanced_estimate(BalancedWeights(0.0, 0.0), t0, t1, (0.6, 0.78))
    assert (est.alpha, est.cap_M) == (0.6, 0.78)


@settings(max_examples=100, deadline=None)
@given(
    w1=st.floats(0, 0.49), w2=st.floats(0, 0.49),
    a0=st.floats(0, 1), a1=st.floats(0, 1), pa=st.floats(0, 1),
    m0=st.floats(0.01, 50), m1=st.floats(0.01, 50), pm=st.floats(0.01, 50),
    shift=st.floats(-0.5, 0.5),
)
def test_balanced_estimate_is_affine(w1, w2, a0, a1, pa, m0, m1, pm, shift):
    w = BalancedWeights(w1, w2)
    t0, t1 = ContractParams(a0, m0), ContractParams(a1, m1)
    base = balanced_estimate(w, t0, t1, (pa, pm))
    assert base.alpha == pytest.approx(w1 * a0 + w2 * a1 + w.residual * pa, abs=1e-14)
    moved = balanced_estimate(w, t0, t1, (pa, pm + shift + 1.0))
    assert moved.cap_M - base.cap_M == pytest.approx(w.residual * (shift + 1.0), abs=1e-12)


def test_equivalence_trivial_cases():
    w = BalancedWeights(0.25, 0.25)
    found, _ = balanced_minimizer([0.0, 1.0], [0.5, 0.5], w, 0.0, 1.0)
    assert found == pytest.approx(0.5, abs=1e-4)
    found, _ = balanced_minimizer([1.0], [1.0], BalancedWeights(0.5, 0.0), 0.0, 5.0)
    assert found == pytest.approx(0.5, abs=1e-3)


def test_equivalence_on_random_discrete_posteriors():
    rng = np.random.default_rng(2718)
    for _ in range(100):
        k = int(rng.integers(1, 101))
        support = rng.normal(0, 3, k)
        probs = rng.dirichlet(np.ones(k))
        w1, w2 = rng.dirichlet(np.ones(3))[:2]
        d0, d1 = rng.normal(0, 3, 2)
        assert verify_balanced_bayes_equivalence(support, probs, BalancedWeights(w1, w2), d0, d1)


def test_equivalence_rejects_large_support():
    with pytest.raises(DomainError):
        verify_balanced_bayes_equivalence(np.arange(101.0), np.ones(101), BalancedWeights(0.1, 0.1), 0, 1)
