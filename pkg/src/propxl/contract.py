"""The proportional excess-of-loss contract and the risk measures around it.

Per claim ``x`` the insurer keeps ``Y = alpha * min(x, M)`` and the reinsurer
pays ``I = x - Y``.  Pure quota-share (``Y = alpha x``) and pure per-claim
excess of loss (``Y = min(x, M)``) are provided for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import DomainError

__all__ = [
    "ContractParams",
    "LossSplit",
    "split",
    "split_proportional",
    "split_excess",
    "retained",
    "RetainedLoss",
    "var",
    "tvar",
    "DominanceReport",
    "check_retained_dominance",
    "VarianceOrderReport",
    "check_variance_order",
]


@dataclass(frozen=True)
class ContractParams:
    """Retention share ``alpha`` in [0, 1] and per-claim cap ``M`` > 0."""

    alpha: float
    cap_M: float

    def __post_init__(self):
        a, m = float(self.alpha), float(self.cap_M)
        if not 0.0 <= a <= 1.0:
            raise DomainError(f"alpha must lie in [0, 1], got {a}")
        if not (m > 0.0 and math.isfinite(m)):
            raise DomainError(f"cap_M must be positive and finite, got {m}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "cap_M", m)

    def as_tuple(self) -> tuple[float, float]:
        return (self.alpha, self.cap_M)


@dataclass(frozen=True)
class LossSplit:
    insurer_part: float
    reinsurer_part: float
    total: float


def _check_claim(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("claims must be nonnegative")
    return arr


def retained(x, c: ContractParams):
    """Vectorized insurer share ``alpha * min(x, M)``."""
    return c.alpha * np.minimum(_check_claim(x), c.cap_M)


def split(x: float, c: ContractParams) -> LossSplit:
    x = float(_check_claim(x))
    y = c.alpha * min(x, c.cap_M)
    return LossSplit(y, x - y, x)


def split_proportional(x: float, alpha: float) -> LossSplit:
    x = float(_check_claim(x))
    y = alpha * x
    return LossSplit(y, x - y, x)


def split_excess(x: float, cap_M: float) -> LossSplit:
    x = float(_check_claim(x))
    y = min(x, cap_M)
    return LossSplit(y, x - y, x)


@dataclass(frozen=True)
class RetainedLoss:
    """Distribution of ``g(X)`` for a nondecreasing transform ``g``.

    Quantiles of a nondecreasing transform are the transformed quantiles, so
    VaR and TVaR need nothing else.
    """

    model: object
    transform: Callable[[np.ndarray], np.ndarray]
    kinks: tuple = field(default=())

    @classmethod
    def combined(cls, model, c: ContractParams) -> "RetainedLoss":
        return cls(model, lambda x: c.alpha * np.minimum(x, c.cap_M), (float(model.cdf(c.cap_M)),))

    @classmethod
    def proportional(cls, model, alpha: float) -> "RetainedLoss":
        return cls(model, lambda x: alpha * np.asarray(x))

    @classmethod
    def excess(cls, model, cap_M: float) -> "RetainedLoss":
        return cls(model, lambda x: np.minimum(x, cap_M), (float(model.cdf(cap_M)),))

    def quantile(self, q):
        out = self.transform(np.asarray(self.model.quantile(q)))
        return out if np.ndim(out) else float(out)


def _check_level(p: float) -> None:
    if not 0.0 < p < 1.0:
        raise DomainError(f"risk level p must lie in (0, 1), got {p}")


def _empirical_index(n: int, p: float) -> int:
    """1-based smallest ``k`` with ``k / n >= p``."""
    k = math.ceil(n * p)
    if k > 1 and (k - 1) / n >= p:
        k -= 1
    return max(k, 1)


def var(values, p: float) -> float:
    """Value-at-Risk ``inf{x : F(x) >= p}``.

    ``values`` is either a sample (any 1-d array-like) or an object exposing
    ``quantile``; for a sample the empirical cdf is used, which picks the
    order statistic of rank ``ceil(n p)``.
    """
    _check_level(p)
    if hasattr(values, "quantile") and not isinstance(values, np.ndarray):
        return float(values.quantile(p))
    x = np.sort(np.asarray(values, dtype=float))
    if x.size == 0:
        raise DomainError("VaR of an empty sample")
    return float(x[_empirical_index(x.size, p) - 1])


_TVAR_TOP = 1.0 - 1e-10


def tvar(values, p: float) -> float:
    """Tail-Value-at-Risk, the average of VaR over levels in ``(p, 1)``.

    Samples are handled exactly (the empirical quantile function is a step
    function).  Distributions are integrated adaptively on ``(p, 1 - 1e-10)``
    at relative tolerance 1e-8.
    """
    _check_level(p)
    if hasattr(values, "quantile") and not isinstance(values, np.ndarray):
        top = max(_TVAR_TOP, p + 0.5 * (1.0 - p))
        kinks = [k for k in getattr(values, "kinks", ()) if p < k < top]
        val, _ = integrate.quad(
            lambda u: float(values.quantile(u)),
            p,
            top,
            epsabs=0.0,
            epsrel=1e-8,
            limit=500,
            points=kinks or None,
        )
        return val / (1.0 - p)
    x = np.sort(np.asarray(values, dtype=float))
    n = x.size
    if n == 0:
        raise DomainError("TVaR of an empty sample")
    k = _empirical_index(n, p)
    # level mass (k/n - p) sits on x_(k); each later order statistic has 1/n
    total = (k / n - p) * x[k - 1] + x[k:].sum() / n
    return float(total / (1.0 - p))


@dataclass
class DominanceReport:
    holds: bool
    n_checked: int
    counterexamples: list = field(default_factory=list)


def check_retained_dominance(
    xs: Sequence[float],
    c: ContractParams,
    retained_values: Sequence[float] | None = None,
) -> DominanceReport:
    """Check pointwise ``alpha min(x,M) <= min(x,M)`` and ``<= alpha x``.

    ``retained_values`` replaces the contract's own retained amounts, which
    lets callers feed a deliberately corrupted split as a negative control.
    Counterexamples are ``(index, x, retained, bound, which)`` tuples.
    """
    x = _check_claim(xs)
    y = retained(x, c) if retained_values is None else np.asarray(retained_values, dtype=float)
    excess_bound = np.minimum(x, c.cap_M)
    prop_bound = c.alpha * x
    bad = []
    for name, bound in (("excess", excess_bound), ("proportional", prop_bound)):
        for i in np.flatnonzero(y > bound):
            bad.append((int(i), float(x[i]), float(y[i]), float(bound[i]), name))
    return DominanceReport(holds=not bad, n_checked=int(x.size), counterexamples=bad)


@dataclass
class VarianceOrderReport:
    holds: bool | None
    preconditions_ok: bool
    failures: list
    var_other: float
    var_combined: float


def check_variance_order(
    xs: Sequence[float],
    c: ContractParams,
    other_I: Sequence[float],
    *,
    mean_tol: float = 1e-9,
) -> VarianceOrderReport:
    """Empirical check of the retained-variance ordering.

    On the sample ``xs`` the competing reinsurer payments ``other_I`` must have
    the same mean as the combined contract's payments ``I_N`` and satisfy,
    pointwise,

    (i)   ``I >= I_N`` where ``x <= M``;
    (ii)  ``I >= I_N`` where ``x >= M`` and ``x - I <= M``;
    (iii) ``I <= I_N`` where ``x >= M`` and ``x - I >= M``.

    If they do, ``holds`` says whether ``Var(x - I) >= Var(x - I_N)``.  If a
    precondition fails, ``holds`` is ``None`` and ``failures`` names it.
    """
    x = _check_claim(xs)
    other = np.asarray(other_I, dtype=float)
    if other.shape != x.shape:
        raise DomainError("other_I must have one entry per claim")
    i_n = x - retained(x, c)
    m = c.cap_M
    failures = []
    gap = abs(other.mean() - i_n.mean())
    if gap > mean_tol * max(1.0, abs(i_n.mean())):
        failures.append(f"means differ by {gap:.3g}")
    below = x <= m
    above = x >= m
    low_ret = above & (x - other <= m)
    high_ret = above & (x - other >= m)
    for label, mask, ok in (
        ("(i)", below, other >= i_n),
        ("(ii)", low_ret, other >= i_n),
        ("(iii)", high_ret, other <= i_n),
    ):
        bad = np.flatnonzero(mask & ~ok)
        if bad.size:
            failures.append(f"condition {label} fails at indices {bad.tolist()[:10]}")
    v_other = float(np.var(x - other))
    v_comb = float(np.var(x - i_n))
    ok = not failures
    # 1e-12 slack absorbs rounding when the two variances coincide
    holds = (v_other >= v_comb - 1e-12 * max(1.0, v_comb)) if ok else None
    return VarianceOrderReport(holds, ok, failures, v_other, v_comb)
