"""Compound-Poisson surplus simulation for the insurer and the reinsurer.

Claims arrive as a Poisson process on ``[0, t]``; premiums accrue linearly.
All contracts evaluated against one :class:`ClaimDraws` see the same claims,
so differences between contracts have small Monte Carlo error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .contract import ContractParams
from .errors import DomainError
from .integrals import lower_integral, require_exp_moment, tail_integral
from .utility import UtilityConfig, insurer_premium, reinsurer_premium

Party = Literal["insurer", "reinsurer"]

__all__ = [
    "ClaimDraws",
    "SurplusStats",
    "draw_claims",
    "terminal_utilities",
    "simulate_surplus",
    "analytic_expected_utility",
    "NeighborRow",
    "neighbor_check",
]


@dataclass(frozen=True)
class ClaimDraws:
    counts: np.ndarray  # claims per replication
    claims: np.ndarray  # all claims, grouped by replication
    times: np.ndarray  # arrival times, sorted within each replication
    rep: np.ndarray  # replication index of every claim
    lam_t: float
    horizon: float

    @property
    def reps(self) -> int:
        return int(self.counts.size)


@dataclass
class SurplusStats:
    expected_utility: float
    std_error: float
    ruin_frequency: float
    reps: int


def draw_claims(model, lam: float, horizon: float, reps: int, seed: int) -> ClaimDraws:
    if reps < 1:
        raise DomainError("need at least one replication")
    rng = np.random.default_rng(seed)
    lam_t = lam * horizon
    counts = rng.poisson(lam_t, reps) if lam_t > 0 else np.zeros(reps, dtype=np.int64)
    total = int(counts.sum())
    u = rng.random(total)
    u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
    claims = np.asarray(model.quantile(u), dtype=float) if total else np.empty(0)
    rep = np.repeat(np.arange(reps), counts)
    times = rng.random(total) * horizon
    order = np.lexsort((times, rep))
    return ClaimDraws(counts, claims[order], times[order], rep, lam_t, horizon)


def _party_amounts(draws: ClaimDraws, c: ContractParams, party: Party) -> np.ndarray:
    kept = c.alpha * np.minimum(draws.claims, c.cap_M)
    if party == "insurer":
        return kept
    if party == "reinsurer":
        return draws.claims - kept
    raise DomainError(f"party must be 'insurer' or 'reinsurer', got {party!r}")


def _premium(c, model, cfg, party, lam_t):
    if party == "insurer":
        return insurer_premium(c, model, cfg, lam_t=lam_t)
    return reinsurer_premium(c, model, cfg, lam_t=lam_t)


def terminal_utilities(
    draws: ClaimDraws, c: ContractParams, model, cfg: UtilityConfig, party: Party
) -> tuple[np.ndarray, np.ndarray]:
    """Per-replication utility of terminal wealth and a ruin indicator."""
    amounts = _party_amounts(draws, c, party)
    premium = _premium(c, model, cfg, party, draws.lam_t)
    paid = np.bincount(draws.rep, weights=amounts, minlength=draws.reps)
    wealth = cfg.initial_wealth + premium - paid
    utility = -np.exp(-cfg.beta * wealth)

    ruined = np.zeros(draws.reps, dtype=bool)
    if amounts.size:
        # running claim total within each replication, checked at claim instants
        cum = np.cumsum(amounts)
        starts = np.concatenate([[0], np.cumsum(draws.counts)[:-1]])
        offset = np.repeat(cum[starts[draws.counts > 0]] - amounts[starts[draws.counts > 0]],
                           draws.counts[draws.counts > 0])
        running = cum - offset
        rate = premium / draws.horizon if draws.horizon > 0 else 0.0
        level = cfg.initial_wealth + rate * draws.times - running
        ruined[np.unique(draws.rep[level < 0])] = True
    return utility, ruined


def simulate_surplus(
    c: ContractParams,
    model,
    cfg: UtilityConfig,
    party: Party,
    reps: int,
    seed: int,
    *,
    horizon: float | None = None,
) -> SurplusStats:
    """Monte Carlo expected utility of terminal wealth, its standard error and
    the frequency of ruin before the horizon.

    ``horizon`` overrides ``cfg.horizon_t`` and may be 0 (no claims, no premium).
    """
    if reps < 1000:
        raise DomainError("simulate_surplus needs reps >= 1000")
    if party == "reinsurer":
        require_exp_moment(model, cfg.beta)
    t = cfg.horizon_t if horizon is None else float(horizon)
    if t < 0:
        raise DomainError("horizon must be nonnegative")
    draws = draw_claims(model, cfg.lam, t, reps, seed)
    util, ruined = terminal_utilities(draws, c, model, cfg, party)
    return SurplusStats(
        expected_utility=float(util.mean()),
        std_error=float(util.std(ddof=1) / math.sqrt(reps)),
        ruin_frequency=float(ruined.mean()),
        reps=reps,
    )


def analytic_expected_utility(c: ContractParams, model, cfg: UtilityConfig, party: Party) -> float:
    """``-exp(-beta (u0 + premium)) * exp(lam t (E[exp(beta Y)] - 1))``."""
    b, a, m = cfg.beta, c.alpha, c.cap_M
    surv = float(model.sf(m))
    if party == "insurer":
        mgf = lower_integral(model, lambda x: math.exp(a * b * x), m) + math.exp(a * b * m) * surv
    else:
        require_exp_moment(model, b)
        mgf = lower_integral(model, lambda x: math.exp(b * (1 - a) * x), m)
        mgf += math.exp(b * (1 - a) * m) * tail_integral(model, lambda x: 1.0, m, tilt=b)
    premium = _premium(c, model, cfg, party, cfg.lam_t)
    return -math.exp(-b * (cfg.initial_wealth + premium) + cfg.lam_t * (mgf - 1.0))


@dataclass
class NeighborRow:
    params: ContractParams
    expected_utility: float
    margin: float  # center minus neighbor
    std_error: float  # of the paired difference
    beaten: bool


def neighbor_check(
    c: ContractParams,
    model,
    cfg: UtilityConfig,
    party: Party,
    reps: int = 100_000,
    seed: int = 0,
    *,
    d_alpha: float = 0.05,
    m_frac: float = 0.10,
) -> tuple[float, list[NeighborRow]]:
    """Compare expected utility at ``c`` with its 3x3 stencil neighbours.

    Neighbours are ``(alpha +- d_alpha, M (1 +- m_frac))`` and the mixed
    corners.  alpha is clipped to [0, 1]; clipped points that coincide with
    another stencil point are dropped.  All points share one set of claim
    draws and the standard error is that of the paired difference.
    A neighbour counts as beaten when ``margin > 2 * std_error``.
    """
    draws = draw_claims(model, cfg.lam, cfg.horizon_t, reps, seed)
    center, _ = terminal_utilities(draws, c, model, cfg, party)
    seen = {c.as_tuple()}
    rows = []
    for da in (-d_alpha, 0.0, d_alpha):
        for dm in (-m_frac, 0.0, m_frac):
            a = min(max(c.alpha + da, 0.0), 1.0)
            p = ContractParams(a, c.cap_M * (1.0 + dm))
            if p.as_tuple() in seen:
                continue
            seen.add(p.as_tuple())
            util, _ = terminal_utilities(draws, p, model, cfg, party)
            diff = center - util
            se = float(diff.std(ddof=1) / math.sqrt(reps))
            margin = float(diff.mean())
            rows.append(NeighborRow(p, float(util.mean()), margin, se, margin > 2 * se))
    return float(center.mean()), rows
