"""Optimal proportional-excess-of-loss reinsurance.

The contract leaves the insurer ``Y = alpha * min(X, M)`` of each claim ``X``
and cedes ``I = X - Y``.  The package solves for the insurer- and
reinsurer-optimal ``(alpha, M)`` under exponential utility, computes a grid
posterior for ``(alpha, M)`` from ceded losses and blends the three with the
doubly-balanced square-error estimator.
"""

from .bayes import (
    BalancedWeights,
    CededSample,
    GridSpec,
    PosteriorSummary,
    PriorTriple,
    balanced_estimate,
    log_likelihood,
    posterior_summary,
    verify_balanced_bayes_equivalence,
)
from .contract import ContractParams, split, tvar, var
from .distributions import ClaimModel, PriorSpec, parse_claim_model, parse_prior
from .errors import (
    ConfigError,
    DegenerateLoading,
    DivergentMoment,
    DomainError,
    NewtonStalled,
    NoRootFound,
    NumericError,
    NumericUnderflow,
    PropXLError,
)
from .insurer import g0, solve_insurer
from .reinsurer import g1, solve_reinsurer
from .simulation import simulate_surplus
from .utility import UtilityConfig

__version__ = "0.1.0"
