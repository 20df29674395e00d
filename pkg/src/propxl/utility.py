"""Exponential-utility settings and expected-value premiums for both parties."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .contract import ContractParams
from .errors import DomainError
from .integrals import lower_integral, tail_integral

__all__ = ["UtilityConfig", "insurer_premium", "reinsurer_premium", "expected_retained", "expected_ceded"]


@dataclass(frozen=True)
class UtilityConfig:
    """One party's risk aversion, safety loading and surplus-process settings.

    Attributes
    ----------
    beta : float
        Risk aversion of ``u(w) = -exp(-beta w)``.
    loading : float
        Safety loading of the expected-value premium; must exceed -1.
    lam : float
        Poisson claim intensity.
    horizon_t : float
        Time horizon.
    initial_wealth : float
        Surplus at time zero.
    """

    beta: float
    loading: float
    lam: float = 1.0
    horizon_t: float = 1.0
    initial_wealth: float = 0.0

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError(f"beta must be positive, got {self.beta}")
        if not self.loading > -1:
            raise DomainError(f"loading must exceed -1, got {self.loading}")
        if not self.lam > 0:
            raise DomainError(f"lambda must be positive, got {self.lam}")
        if not self.horizon_t > 0:
            raise DomainError(f"horizon must be positive, got {self.horizon_t}")
        if not math.isfinite(self.initial_wealth):
            raise DomainError("initial wealth must be finite")

    @property
    def lam_t(self) -> float:
        return self.lam * self.horizon_t


def expected_retained(c: ContractParams, model) -> float:
    """``E[alpha min(X, M)]``."""
    m = c.cap_M
    return c.alpha * (lower_integral(model, lambda x: x, m) + m * float(model.sf(m)))


def expected_ceded(c: ContractParams, model) -> float:
    """``E[X - alpha min(X, M)]`` split as in the reinsurer premium."""
    m = c.cap_M
    below = (1.0 - c.alpha) * lower_integral(model, lambda x: x, m)
    above = tail_integral(model, lambda x: x - c.alpha * m, m)
    return below + above


def insurer_premium(c: ContractParams, model, cfg: UtilityConfig, lam_t: float | None = None) -> float:
    lt = cfg.lam_t if lam_t is None else lam_t
    return (1.0 + cfg.loading) * lt * expected_retained(c, model)


def reinsurer_premium(c: ContractParams, model, cfg: UtilityConfig, lam_t: float | None = None) -> float:
    lt = cfg.lam_t if lam_t is None else lam_t
    return (1.0 + cfg.loading) * lt * expected_ceded(c, model)
