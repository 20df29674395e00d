import math

import numpy as np
import pytest

from propxl.contract import ContractParams
from propxl.distributions import ClaimModel
from propxl.errors import DivergentMoment, DomainError
from propxl.simulation import (
    analytic_expected_utility,
    draw_claims,
    neighbor_check,
    simulate_surplus,
    terminal_utilities,
)
from propxl.utility import UtilityConfig, insurer_premium


def test_no_claims_gives_utility_of_initial_wealth(exp1):
    cfg = UtilityConfig(2.0, 0.8, initial_wealth=0.7)
    s = simulate_surplus(ContractParams(0.5, 1.0), exp1, cfg, "insurer", 1000, seed=1, horizon=0.0)
    # exact up to the rounding of averaging 1000 equal terms
    assert s.expected_utility == pytest.approx(-math.exp(-2.0 * 0.7), rel=1e-14)
    assert s.std_error < 1e-15 and s.ruin_frequency == 0.0


@pytest.mark.parametrize("party, c", [("insurer", ContractParams(0.27, 1.08)), ("reinsurer", ContractParams(0.38, 5.0))])
def test_monte_carlo_matches_analytic_value(party, c, exp1):
    cfg = UtilityConfig(2.0, 0.8) if party == "insurer" else UtilityConfig(0.2, 0.3)
    s = simulate_surplus(c, exp1, cfg, party, 100_000, seed=11)
    exact = analytic_expected_utility(c, exp1, cfg, party)
    assert abs(s.expected_utility - exact) < 2 * s.std_error


def test_translation_covariance_in_initial_wealth(exp1):
    c = ContractParams(0.4, 1.2)
    a = simulate_surplus(c, exp1, UtilityConfig(2.0, 0.8), "insurer", 5000, seed=3)
    b = simulate_surplus(c, exp1, UtilityConfig(2.0, 0.8, initial_wealth=0.3), "insurer", 5000, seed=3)
    assert b.expected_utility == pytest.approx(math.exp(-2.0 * 0.3) * a.expected_utility, rel=1e-12)


def test_seeded_runs_repeat(exp1):
    c = ContractParams(0.4, 1.2)
    cfg = UtilityConfig(2.0, 0.8, lam=3.0)
    assert simulate_surplus(c, exp1, cfg, "insurer", 2000, 5) == simulate_surplus(c, exp1, cfg, "insurer", 2000, 5)


def test_argument_errors(exp1):
    with pytest.raises(DomainError):
        simulate_surplus(ContractParams(0.5, 1.0), exp1, UtilityConfig(2.0, 0.8), "insurer", 999, 0)
    with pytest.raises(DivergentMoment):
        simulate_surplus(ContractParams(0.5, 1.0), exp1, UtilityConfig(1.0, 0.3), "reinsurer", 1000, 0)
    with pytest.raises(DomainError):
        simulate_surplus(ContractParams(0.5, 1.0), exp1, UtilityConfig(2.0, 0.8), "broker", 1000, 0)


def test_ruin_indicator_against_direct_loop(exp1):
    cfg = UtilityConfig(2.0, 0.8, lam=4.0, horizon_t=2.0, initial_wealth=0.5)
    c = ContractParams(0.6, 0.9)
    draws = draw_claims(exp1, cfg.lam, cfg.horizon_t, 300, seed=9)
    _, ruined = terminal_utilities(draws, c, exp1, cfg, "insurer")
    rate = insurer_premium(c, exp1, cfg) / cfg.horizon_t
    start = 0
    for r, n in enumerate(draws.counts):
        hit = False
        paid = 0.0
        for k in range(start, start + n):
            paid += c.alpha * min(draws.claims[k], c.cap_M)
            if cfg.initial_wealth + rate * draws.times[k] - paid < 0:
                hit = True
        assert ruined[r] == hit
        start += n
    assert 0 < ruined.mean() < 1


def test_arrival_times_sorted_within_replication(exp1):
    d = draw_claims(exp1, 5.0, 1.0, 200, seed=4)
    for r in range(d.reps):
        t = d.times[d.rep == r]
        assert np.all(np.diff(t) >= 0) and np.all((0 <= t) & (t <= 1))


def test_ruin_frequency_falls_with_wealth(exp1):
    c = ContractParams(0.5, 2.0)
    freqs = [
        simulate_surplus(c, exp1, UtilityConfig(2.0, 0.8, initial_wealth=u), "insurer", 5000, 2).ruin_frequency
        for u in (0.0, 0.5, 2.0)
    ]
    assert freqs[0] >= freqs[1] >= freqs[2]


def test_neighbour_stencil_clips_and_deduplicates(exp1):
    centre, rows = neighbor_check(ContractParams(1.0, 0.3), exp1, UtilityConfig(2.0, 0.8), "insurer", 2000, 1)
    assert len(rows) == 5
    assert all(r.params.alpha <= 1.0 for r in rows)
    _, rows = neighbor_check(ContractParams(0.5, 1.0), exp1, UtilityConfig(2.0, 0.8), "insurer", 2000, 1)
    assert len(rows) == 8
