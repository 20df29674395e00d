"""Posterior for (theta, alpha, M) from ceded losses, and the balanced estimator.

A ceded amount ``z = x - alpha min(x, M)`` has density

    f_Z(z) = f(z / (1-alpha)) / (1-alpha)   for z <= (1-alpha) M,
             f(z + alpha M)                 otherwise,

so the likelihood of a sample switches form with the count ``n1`` of
observations on the proportional branch.  The posterior is evaluated on a
deterministic tensor midpoint grid and normalized with log-sum-exp.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .contract import ContractParams
from .distributions import ClaimModel, PriorSpec
from .errors import DomainError, NumericUnderflow

__all__ = [
    "CededSample",
    "PriorTriple",
    "BalancedWeights",
    "GridSpec",
    "PosteriorSummary",
    "proportional_branch_count",
    "ceded_density",
    "log_likelihood",
    "posterior_summary",
    "balanced_estimate",
    "balanced_minimizer",
    "verify_balanced_bayes_equivalence",
]


@dataclass(frozen=True)
class CededSample:
    z: tuple

    def __post_init__(self):
        z = tuple(float(v) for v in self.z)
        if any(not (v >= 0.0) for v in z):
            raise DomainError("ceded observations must be nonnegative")
        object.__setattr__(self, "z", z)

    @classmethod
    def from_claims(cls, claims: Sequence[float], c: ContractParams) -> "CededSample":
        x = np.asarray(claims, dtype=float)
        return cls(tuple(x - c.alpha * np.minimum(x, c.cap_M)))

    def __len__(self):
        return len(self.z)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.z, dtype=float)


@dataclass(frozen=True)
class PriorTriple:
    theta_prior: PriorSpec
    alpha_prior: PriorSpec
    m_prior: PriorSpec

    def __post_init__(self):
        lo, hi = self.alpha_prior.support
        if lo < 0.0 or hi > 1.0:
            raise DomainError(f"alpha prior support must lie in [0, 1], got {(lo, hi)}")
        if self.alpha_prior.is_point_mass and hi >= 1.0:
            raise DomainError("alpha = 1 leaves the ceded-loss likelihood undefined")
        for name, prior in (("M", self.m_prior), ("theta", self.theta_prior)):
            lo, _ = prior.support
            if lo < 0.0 or (prior.is_point_mass and lo <= 0.0):
                raise DomainError(f"{name} prior support must lie in (0, inf)")


@dataclass(frozen=True)
class BalancedWeights:
    """Weights of the two target estimators; the posterior gets the rest.

    ``closed=True`` admits ``w1 + w2 = 1`` (no posterior weight), the limiting
    row that tabulations of the estimator sometimes include.
    """

    w1: float
    w2: float
    closed: bool = field(default=False, compare=False)

    def __post_init__(self):
        if not (0.0 <= self.w1 < 1.0 and 0.0 <= self.w2 < 1.0):
            raise DomainError(f"weights must lie in [0, 1), got {(self.w1, self.w2)}")
        total = self.w1 + self.w2
        if not (total < 1.0 or (self.closed and total <= 1.0 + 1e-12)):
            raise DomainError(f"w1 + w2 must be < 1, got {total}")

    @property
    def residual(self) -> float:
        return max(1.0 - self.w1 - self.w2, 0.0)


@dataclass(frozen=True)
class GridSpec:
    """Midpoint grid resolution per axis; each axis spans prior quantiles
    ``[tail, 1 - tail]``.  Point-mass axes collapse to their atom."""

    n_theta: int = 200
    n_alpha: int = 200
    n_m: int = 200
    tail: float = 1e-4

    def doubled(self) -> "GridSpec":
        return GridSpec(2 * self.n_theta, 2 * self.n_alpha, 2 * self.n_m, self.tail)


@dataclass
class PosteriorSummary:
    mean_alpha: float
    mean_m: float
    mean_theta: float
    grid_spec: GridSpec
    bounds: dict
    log_normalization: float
    normalization_constant: float
    map_cell: dict = field(default_factory=dict)


def proportional_branch_count(z: Sequence[float], c: ContractParams) -> int:
    """``n1 = #{i : z_i <= (1 - alpha) M}``."""
    return int(np.count_nonzero(np.asarray(z, dtype=float) <= (1.0 - c.alpha) * c.cap_M))


def _check_alpha(alpha) -> None:
    if np.any(np.asarray(alpha) >= 1.0):
        raise DomainError("alpha = 1 makes the proportional branch degenerate")


def ceded_density(z, model: ClaimModel, c: ContractParams):
    """Density of one ceded amount ``Z`` given the claim model and contract."""
    _check_alpha(c.alpha)
    z = np.asarray(z, dtype=float)
    s = 1.0 - c.alpha
    low = np.exp(model.logpdf(z / s)) / s
    high = np.exp(model.logpdf(z + c.alpha * c.cap_M))
    out = np.where(z < 0, 0.0, np.where(z <= s * c.cap_M, low, high))
    return out if out.ndim else float(out)


def log_likelihood(
    z: Sequence[float] | CededSample,
    model: ClaimModel,
    c: ContractParams,
    theta: float | None = None,
) -> float:
    """Log joint density of the ceded sample; ``-inf`` if any factor vanishes.

    ``theta`` overrides the claim parameter stored in ``model``.
    """
    _check_alpha(c.alpha)
    z = z.array if isinstance(z, CededSample) else np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise DomainError("ceded observations must be nonnegative")
    th = model.theta if theta is None else theta
    s = 1.0 - c.alpha
    on_prop = z <= s * c.cap_M
    lp = np.where(
        on_prop,
        model.logpdf_theta(z / s, th) - math.log(s),
        model.logpdf_theta(z + c.alpha * c.cap_M, th),
    )
    total = float(np.sum(lp))
    return total if not math.isnan(total) else -math.inf


def _axis(prior: PriorSpec, n: int, tail: float):
    """Midpoint nodes, log prior weights (density times width) and bounds."""
    if prior.is_point_mass:
        x0 = prior.params[0]
        return np.array([x0]), np.array([0.0]), (x0, x0)
    lo = float(prior.quantile(tail))
    hi = float(prior.quantile(1.0 - tail))
    width = (hi - lo) / n
    nodes = lo + (np.arange(n) + 0.5) * width
    return nodes, np.asarray(prior.logpdf(nodes)) + math.log(width), (lo, hi)


def posterior_summary(
    z: Sequence[float] | CededSample,
    model: ClaimModel,
    priors: PriorTriple,
    grid: GridSpec = GridSpec(),
    *,
    chunk: int = 8,
) -> PosteriorSummary:
    """Posterior means of alpha and M (and theta) on a tensor midpoint grid.

    ``model`` fixes the claim family and any shape parameter; its claim
    parameter is integrated against ``priors.theta_prior``.  The grid is
    processed in fixed-size theta slabs and reduced in a fixed order, so the
    result does not depend on how the work is split.
    """
    z = z.array if isinstance(z, CededSample) else np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise DomainError("ceded observations must be nonnegative")
    th, lw_th, b_th = _axis(priors.theta_prior, grid.n_theta, grid.tail)
    al, lw_al, b_al = _axis(priors.alpha_prior, grid.n_alpha, grid.tail)
    ms, lw_m, b_m = _axis(priors.m_prior, grid.n_m, grid.tail)
    if np.any(al >= 1.0):
        raise DomainError("alpha grid reaches 1")

    s = (1.0 - al)[:, None]  # (A, 1)
    thr = s * ms[None, :]  # (A, M)
    shift = al[:, None] * ms[None, :]
    prior_am = lw_al[:, None] + lw_m[None, :]

    slabs = []
    for start in range(0, th.size, chunk):
        t = th[start : start + chunk][:, None, None]  # (T, 1, 1)
        ll = np.zeros((t.shape[0], al.size, ms.size))
        for zi in z:
            low = model.logpdf_theta(zi / s, t) - np.log(s)  # (T, A, 1)
            high = model.logpdf_theta(zi + shift, t)  # (T, A, M)
            ll += np.where(zi <= thr, low, high)
        ll += prior_am[None] + lw_th[start : start + chunk][:, None, None]
        slabs.append(np.where(np.isnan(ll), -np.inf, ll))
    logpost = np.concatenate(slabs, axis=0)

    if not np.any(np.isfinite(logpost)):
        raise NumericUnderflow("posterior weight is zero on every grid cell")
    log_norm = float(logsumexp(logpost))
    w = np.exp(logpost - log_norm)
    w_th = w.sum(axis=(1, 2))
    w_al = w.sum(axis=(0, 2))
    w_m = w.sum(axis=(0, 1))
    idx = np.unravel_index(int(np.argmax(logpost)), logpost.shape)
    return PosteriorSummary(
        mean_alpha=float(w_al @ al),
        mean_m=float(w_m @ ms),
        mean_theta=float(w_th @ th),
        grid_spec=grid,
        bounds={"theta": b_th, "alpha": b_al, "m": b_m},
        log_normalization=log_norm,
        normalization_constant=math.exp(log_norm) if log_norm > -745 else 0.0,
        map_cell={"theta": float(th[idx[0]]), "alpha": float(al[idx[1]]), "m": float(ms[idx[2]])},
    )


def balanced_estimate(
    w: BalancedWeights,
    target0: ContractParams,
    target1: ContractParams,
    post: PosteriorSummary | tuple,
) -> ContractParams:
    """Square-error doubly-balanced Bayes estimate of ``(alpha, M)``."""
    if isinstance(post, PosteriorSummary):
        mean_a, mean_m = post.mean_alpha, post.mean_m
    else:
        mean_a, mean_m = post
    r = w.residual
    alpha = w.w1 * target0.alpha + w.w2 * target1.alpha + r * mean_a
    cap = w.w1 * target0.cap_M + w.w2 * target1.cap_M + r * mean_m
    return ContractParams(alpha, cap)


def balanced_minimizer(
    support: Sequence[float],
    probs: Sequence[float],
    w: BalancedWeights,
    delta0: float,
    delta1: float,
    n_grid: int = 20_001,
) -> tuple[float, float]:
    """Brute-force argmin of the expected doubly-balanced square loss.

    Returns ``(grid_argmin, grid_step)``; the search grid spans every support
    point and both targets.
    """
    xi = np.asarray(support, dtype=float)
    p = np.asarray(probs, dtype=float)
    p = p / p.sum()
    lo = min(xi.min(), delta0, delta1)
    hi = max(xi.max(), delta0, delta1)
    if hi == lo:
        return float(lo), 0.0
    d = np.linspace(lo, hi, n_grid)
    posterior_loss = p @ (xi[:, None] - d[None, :]) ** 2
    loss = w.w1 * (delta0 - d) ** 2 + w.w2 * (delta1 - d) ** 2 + w.residual * posterior_loss
    return float(d[np.argmin(loss)]), float(d[1] - d[0])


def verify_balanced_bayes_equivalence(
    support: Sequence[float],
    probs: Sequence[float],
    w: BalancedWeights,
    delta0: float,
    delta1: float,
    tol: float = 1e-3,
) -> bool:
    """Check the brute-force minimizer against the mean of the mixed posterior
    ``w1 * point(delta0) + w2 * point(delta1) + (1 - w1 - w2) * posterior``."""
    if len(support) > 100:
        raise DomainError("discrete posterior limited to 100 support points")
    p = np.asarray(probs, dtype=float)
    p = p / p.sum()
    mixed_mean = w.w1 * delta0 + w.w2 * delta1 + w.residual * float(p @ np.asarray(support))
    found, step = balanced_minimizer(support, p, w, delta0, delta1)
    return abs(found - mixed_mean) <= max(tol, step)
