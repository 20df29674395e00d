import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from propxl.contract import ContractParams
from propxl.distributions import ClaimModel
from propxl.errors import DegenerateLoading
from propxl.insurer import g0, g0_gradient, g0_grid, hessian_insurer, solve_insurer
from propxl.utility import UtilityConfig


def g0_exponential(c, rate, cfg):
    """g0 for exponential claims from the antiderivatives of x e^{-rx} and e^{(s-r)x}."""
    a, m, b, r = c.alpha, c.cap_M, cfg.beta, rate
    lt = cfg.lam_t
    surv = math.exp(-r * m)
    first = (1 - surv * (1 + r * m)) / r
    s = a * b
    mgf = r * (1 - math.exp((s - r) * m)) / (r - s)
    return -b * (1 + cfg.loading) * lt * a * (first + m * surv) + lt * (mgf + math.exp(s * m) * surv)


@pytest.mark.parametrize(
    "c, rate",
    [(ContractParams(0.27, 1.08), 1.0), (ContractParams(1.0, 0.3), 1.0), (ContractParams(0.6, 3.0), 2.5)],
    ids=str,
)
def test_g0_matches_closed_form(c, rate, insurer_cfg):
    model = ClaimModel.exponential(rate)
    assert g0(c, model, insurer_cfg) == pytest.approx(g0_exponential(c, rate, insurer_cfg), rel=1e-10)


def test_g0_alpha_zero_is_lambda_t(exp1):
    cfg = UtilityConfig(2.0, 0.8, lam=3.0, horizon_t=0.5)
    assert g0(ContractParams(0.0, 1.7), exp1, cfg) == pytest.approx(1.5, rel=1e-12)


def test_g0_scales_with_lambda_t(exp1, insurer_cfg):
    c = ContractParams(0.4, 0.9)
    doubled = UtilityConfig(2.0, 0.8, lam=2.0)
    assert g0(c, exp1, doubled) == pytest.approx(2 * g0(c, exp1, insurer_cfg), rel=1e-12)


def test_grid_evaluator_agrees_with_quadrature(insurer_cfg):
    model = ClaimModel.weibull(2.0, 1.0)
    alphas = np.array([0.1, 0.5, 1.0])
    ms = np.array([0.2, 0.9, 2.5])
    G = g0_grid(alphas, ms, model, insurer_cfg)
    for i, a in enumerate(alphas):
        for j, m in enumerate(ms):
            assert G[i, j] == pytest.approx(g0(ContractParams(a, m), model, insurer_cfg), rel=1e-9)


@pytest.mark.parametrize("point", [(0.3, 0.8), (0.9, 0.25), (0.5, 2.0)])
def test_gradient_matches_finite_differences(point, exp1, insurer_cfg):
    a, m = point
    ga, gm = g0_gradient(ContractParams(a, m), exp1, insurer_cfg)
    h = 1e-6
    fa = (g0(ContractParams(a + h, m), exp1, insurer_cfg) - g0(ContractParams(a - h, m), exp1, insurer_cfg)) / (2 * h)
    fm = (g0(ContractParams(a, m + h), exp1, insurer_cfg) - g0(ContractParams(a, m - h), exp1, insurer_cfg)) / (2 * h)
    assert ga == pytest.approx(fa, abs=1e-7)
    assert gm == pytest.approx(fm, abs=1e-7)


def test_hessian_shape_and_sign(exp1, insurer_cfg):
    H, det = hessian_insurer(ContractParams(0.27, 1.08), exp1, insurer_cfg)
    assert H[0, 1] == H[1, 0]
    assert H[0, 0] > 0 and det > 0
    assert det == pytest.approx(H[0, 0] * H[1, 1] - H[0, 1] ** 2)


def test_solution_for_unit_exponential(exp1, insurer_cfg):
    res = solve_insurer(exp1, insurer_cfg)
    a, m = res.params.as_tuple()
    # alpha beta M = ln(1 + theta) closes the M-condition
    assert a * insurer_cfg.beta * m == pytest.approx(math.log(1.8), abs=1e-12)
    assert res.projected and a == 1.0
    assert m == pytest.approx(math.log(1.8) / 2.0, abs=1e-12)
    assert abs(res.foc_residual[1]) < 1e-8
    # at the alpha = 1 face the objective still falls towards larger alpha
    assert res.foc_residual[0] < 0
    assert res.hessian_ok
    assert np.all(res.scan["value"] < 0)


def test_solution_beats_published_point(exp1, insurer_cfg):
    res = solve_insurer(exp1, insurer_cfg)
    assert res.objective_value < g0(ContractParams(0.27, 1.08), exp1, insurer_cfg)


def test_grid_oracle_agrees(exp1, insurer_cfg):
    res = solve_insurer(exp1, insurer_cfg)
    alphas = np.linspace(0.01, 1.0, 400)
    ms = np.linspace(0.01, float(exp1.quantile(0.999)), 400)
    G = g0_grid(alphas, ms, exp1, insurer_cfg)
    i, j = np.unravel_index(np.argmin(G), G.shape)
    assert abs(alphas[i] - res.params.alpha) <= alphas[1] - alphas[0]
    assert abs(ms[j] - res.params.cap_M) <= ms[1] - ms[0]


@pytest.mark.parametrize(
    "model",
    [ClaimModel.weibull(2.0, 1.0), ClaimModel.gamma(3.0, 2.0), ClaimModel.exponential(8.0)],
    ids=str,
)
def test_eliminated_condition_has_no_root_for_other_families(model, insurer_cfg):
    res = solve_insurer(model, insurer_cfg)
    assert res.projected
    assert np.all(res.scan["value"] < 0)
    assert res.params.alpha == 1.0


@settings(max_examples=20, deadline=None)
@given(beta=st.floats(0.1, 5.0), loading=st.floats(0.05, 3.0))
def test_projection_is_grid_optimal_along_alpha_one(beta, loading):
    model = ClaimModel.exponential(1.0)
    cfg = UtilityConfig(beta, loading)
    res = solve_insurer(model, cfg)
    m = res.params.cap_M
    for other in (0.7 * m, 0.95 * m, 1.05 * m, 1.4 * m):
        assert res.objective_value <= g0(ContractParams(1.0, other), model, cfg) + 1e-12
    for a in (0.5, 0.9, 0.99):
        assert res.objective_value <= g0(ContractParams(a, math.log1p(loading) / (a * beta)), model, cfg) + 1e-12


@pytest.mark.parametrize("loading", [0.0, -0.2])
def test_nonpositive_loading_is_rejected(exp1, loading):
    with pytest.raises(DegenerateLoading):
        solve_insurer(exp1, UtilityConfig(2.0, loading))


def test_invariance_to_lambda_t_and_wealth(exp1):
    base = solve_insurer(exp1, UtilityConfig(2.0, 0.8)).params
    for kw in ({"lam": 7.0}, {"horizon_t": 0.2}, {"initial_wealth": 50.0}):
        other = solve_insurer(exp1, UtilityConfig(2.0, 0.8, **kw)).params
        assert abs(other.alpha - base.alpha) < 1e-6 and abs(other.cap_M - base.cap_M) < 1e-6
