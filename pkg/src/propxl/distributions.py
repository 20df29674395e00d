"""Claim-size families and prior distributions.

Conventions
-----------
* ``Exponential(rate)``: ``f(x) = rate * exp(-rate * x)``.
* ``Weibull(shape, scale)``: ``f(x) = (k/s) (x/s)^(k-1) exp(-(x/s)^k)``.
* ``Gamma(shape, rate)``: ``f(x) = rate^k x^(k-1) exp(-rate x) / Gamma(k)``.
* ``Beta(a, b)`` on ``[0, 1]``, ``Uniform(lo, hi)``, ``PointMass(x0)``.

Every object is an immutable dataclass.  Sampling is inverse-transform on
``numpy.random.default_rng(seed)`` uniforms, so a fixed seed reproduces the
draw bit for bit.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

import numpy as np
from scipy import special

from .errors import ConfigError, DomainError

__all__ = [
    "ClaimFamily",
    "PriorFamily",
    "ClaimModel",
    "PriorSpec",
    "pdf",
    "cdf",
    "survival",
    "quantile",
    "sample",
    "parse_claim_model",
    "parse_prior",
]


class ClaimFamily(str, Enum):
    EXPONENTIAL = "exponential"
    WEIBULL = "weibull"
    GAMMA = "gamma"


class PriorFamily(str, Enum):
    BETA = "beta"
    EXPONENTIAL = "exponential"
    GAMMA = "gamma"
    UNIFORM = "uniform"
    POINTMASS = "pointmass"


_ARITY = {
    "exponential": 1,
    "weibull": 2,
    "gamma": 2,
    "beta": 2,
    "uniform": 2,
    "pointmass": 1,
}


class _Continuous:
    """Shared density/cdf/quantile formulas, dispatched on ``family.value``."""

    family: Enum
    params: tuple

    @property
    def support(self) -> tuple[float, float]:
        kind = self.family.value
        if kind == "beta":
            return (0.0, 1.0)
        if kind == "uniform":
            return (self.params[0], self.params[1])
        if kind == "pointmass":
            return (self.params[0], self.params[0])
        return (0.0, math.inf)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        kind = self.family.value
        p = self.params
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if kind == "exponential":
                out = np.log(p[0]) - p[0] * x
            elif kind == "weibull":
                k, s = p
                u = x / s
                out = np.log(k / s) + special.xlogy(k - 1.0, u) - u**k
            elif kind == "gamma":
                k, r = p
                out = k * np.log(r) - special.gammaln(k) + special.xlogy(k - 1.0, x) - r * x
            elif kind == "beta":
                a, b = p
                out = (
                    special.xlogy(a - 1.0, x)
                    + special.xlog1py(b - 1.0, -x)
                    - special.betaln(a, b)
                )
            elif kind == "uniform":
                lo, hi = p
                out = np.full_like(x, -np.log(hi - lo))
            else:
                out = np.where(x == p[0], np.inf, -np.inf)
                return out if out.ndim else float(out)
        lo, hi = self.support
        inside = (x >= lo) & (x <= hi)
        out = np.where(inside & ~np.isnan(out), out, -np.inf)
        return out if out.ndim else float(out)

    def pdf(self, x):
        out = np.exp(self.logpdf(x))
        return out if np.ndim(out) else float(out)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        kind = self.family.value
        p = self.params
        if kind == "exponential":
            out = -np.expm1(-p[0] * np.maximum(x, 0.0))
        elif kind == "weibull":
            out = -np.expm1(-((np.maximum(x, 0.0) / p[1]) ** p[0]))
        elif kind == "gamma":
            out = special.gammainc(p[0], p[1] * np.maximum(x, 0.0))
        elif kind == "beta":
            out = special.betainc(p[0], p[1], np.clip(x, 0.0, 1.0))
        elif kind == "uniform":
            out = np.clip((x - p[0]) / (p[1] - p[0]), 0.0, 1.0)
        else:
            out = (x >= p[0]).astype(float)
        return out if out.ndim else float(out)

    def logsf(self, x):
        """Log survival function, accurate deep in the right tail."""
        x = np.asarray(x, dtype=float)
        kind = self.family.value
        p = self.params
        with np.errstate(divide="ignore"):
            if kind == "exponential":
                out = -p[0] * np.maximum(x, 0.0)
            elif kind == "weibull":
                out = -((np.maximum(x, 0.0) / p[1]) ** p[0])
            else:
                out = np.log(self.sf(x))
        return out if np.ndim(out) else float(out)

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        kind = self.family.value
        p = self.params
        if kind == "exponential":
            out = np.exp(-p[0] * np.maximum(x, 0.0))
        elif kind == "weibull":
            out = np.exp(-((np.maximum(x, 0.0) / p[1]) ** p[0]))
        elif kind == "gamma":
            out = special.gammaincc(p[0], p[1] * np.maximum(x, 0.0))
        elif kind == "beta":
            out = special.betainc(p[1], p[0], 1.0 - np.clip(x, 0.0, 1.0))
        else:
            out = 1.0 - np.asarray(self.cdf(x))
        return out if np.ndim(out) else float(out)

    def quantile(self, q):
        """Generalized inverse ``inf{x : F(x) >= q}`` for ``q`` in ``(0, 1)``."""
        q = np.asarray(q, dtype=float)
        if np.any((q <= 0.0) | (q >= 1.0)) or np.any(np.isnan(q)):
            raise DomainError(f"quantile level must lie in (0, 1), got {q}")
        kind = self.family.value
        p = self.params
        if kind == "exponential":
            out = -np.log1p(-q) / p[0]
        elif kind == "weibull":
            out = p[1] * (-np.log1p(-q)) ** (1.0 / p[0])
        elif kind == "gamma":
            out = special.gammaincinv(p[0], q) / p[1]
        elif kind == "beta":
            out = special.betaincinv(p[0], p[1], q)
        elif kind == "uniform":
            out = p[0] + q * (p[1] - p[0])
        else:
            out = np.full_like(q, p[0])
        return out if out.ndim else float(out)

    def isf(self, q):
        """Inverse survival function; stays accurate for tiny ``q``."""
        q = np.asarray(q, dtype=float)
        kind = self.family.value
        p = self.params
        if kind == "exponential":
            out = -np.log(q) / p[0]
        elif kind == "weibull":
            out = p[1] * (-np.log(q)) ** (1.0 / p[0])
        elif kind == "gamma":
            out = special.gammainccinv(p[0], q) / p[1]
        else:
            out = np.asarray(self.quantile(1.0 - q))
        return out if out.ndim else float(out)

    def mean(self) -> float:
        kind = self.family.value
        p = self.params
        if kind == "exponential":
            return 1.0 / p[0]
        if kind == "weibull":
            return p[1] * math.gamma(1.0 + 1.0 / p[0])
        if kind == "gamma":
            return p[0] / p[1]
        if kind == "beta":
            return p[0] / (p[0] + p[1])
        if kind == "uniform":
            return 0.5 * (p[0] + p[1])
        return p[0]

    def sample(self, n: int, seed: int) -> np.ndarray:
        """Draw ``n`` values by inverse transform from ``default_rng(seed)``."""
        if n < 0:
            raise DomainError("sample size must be nonnegative")
        if n == 0:
            return np.empty(0)
        u = np.random.default_rng(seed).random(n)
        # random() lies in [0, 1); 0 would hit the quantile domain edge
        u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
        return np.asarray(self.quantile(u), dtype=float)

    def __str__(self) -> str:
        args = ",".join(f"{v:g}" for v in self.params)
        return f"{self.family.value}({args})"


def _check_arity(kind: str, params: tuple) -> None:
    if len(params) != _ARITY[kind]:
        raise DomainError(f"{kind} takes {_ARITY[kind]} parameter(s), got {len(params)}")
    if not all(math.isfinite(v) for v in params):
        raise DomainError(f"{kind} parameters must be finite, got {params}")


@dataclass(frozen=True)
class ClaimModel(_Continuous):
    """Parametric claim-size distribution.

    The *claim parameter* targeted by the Bayesian layer is the rate for the
    exponential and gamma families and the scale for the Weibull family; the
    shape stays fixed at the value stored here.
    """

    family: ClaimFamily
    params: tuple

    def __post_init__(self):
        object.__setattr__(self, "family", ClaimFamily(self.family))
        object.__setattr__(self, "params", tuple(float(v) for v in self.params))
        _check_arity(self.family.value, self.params)
        if any(v <= 0.0 for v in self.params):
            raise DomainError(f"claim parameters must be positive, got {self.params}")

    @classmethod
    def exponential(cls, rate: float) -> "ClaimModel":
        return cls(ClaimFamily.EXPONENTIAL, (rate,))

    @classmethod
    def weibull(cls, shape: float, scale: float) -> "ClaimModel":
        return cls(ClaimFamily.WEIBULL, (shape, scale))

    @classmethod
    def gamma(cls, shape: float, rate: float) -> "ClaimModel":
        return cls(ClaimFamily.GAMMA, (shape, rate))

    @property
    def theta(self) -> float:
        return self.params[1] if self.family is ClaimFamily.WEIBULL else self.params[-1]

    def with_theta(self, theta: float) -> "ClaimModel":
        if self.family is ClaimFamily.EXPONENTIAL:
            return replace(self, params=(theta,))
        return replace(self, params=(self.params[0], theta))

    def logpdf_theta(self, x, theta):
        """Log density with the claim parameter broadcast as an array."""
        x = np.asarray(x, dtype=float)
        theta = np.asarray(theta, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if self.family is ClaimFamily.EXPONENTIAL:
                out = np.log(theta) - theta * x
            elif self.family is ClaimFamily.WEIBULL:
                k = self.params[0]
                u = x / theta
                out = np.log(k / theta) + special.xlogy(k - 1.0, u) - u**k
            else:
                k = self.params[0]
                out = (
                    k * np.log(theta) - special.gammaln(k) + special.xlogy(k - 1.0, x) - theta * x
                )
        return np.where((x >= 0.0) & ~np.isnan(out), out, -np.inf)

    def exp_moment_abscissa(self) -> float:
        """Supremum of ``b`` with ``E[exp(b X)] < inf``."""
        if self.family is ClaimFamily.EXPONENTIAL:
            return self.params[0]
        if self.family is ClaimFamily.GAMMA:
            return self.params[1]
        k, s = self.params
        if k > 1.0:
            return math.inf
        if k == 1.0:
            return 1.0 / s
        return 0.0


@dataclass(frozen=True)
class PriorSpec(_Continuous):
    """Prior for one of the posterior coordinates (theta, alpha or M)."""

    family: PriorFamily
    params: tuple

    def __post_init__(self):
        object.__setattr__(self, "family", PriorFamily(self.family))
        object.__setattr__(self, "params", tuple(float(v) for v in self.params))
        kind = self.family.value
        _check_arity(kind, self.params)
        if kind in ("beta", "exponential", "gamma") and any(v <= 0 for v in self.params):
            raise DomainError(f"{kind} prior parameters must be positive")
        if kind == "uniform" and not self.params[0] < self.params[1]:
            raise DomainError("uniform prior bounds must satisfy lo < hi")

    @property
    def is_point_mass(self) -> bool:
        return self.family is PriorFamily.POINTMASS


def pdf(model, x):
    return model.pdf(x)


def cdf(model, x):
    return model.cdf(x)


def survival(model, x):
    return model.sf(x)


def quantile(model, p):
    return model.quantile(p)


def sample(model, n: int, seed: int) -> np.ndarray:
    return model.sample(n, seed)


_SPEC_RE = re.compile(r"^\s*([A-Za-z]+)\s*\(([^)]*)\)\s*$")
_ALIASES = {
    "exp": "exponential",
    "expon": "exponential",
    "exponential": "exponential",
    "weibull": "weibull",
    "gamma": "gamma",
    "beta": "beta",
    "beat": "beta",
    "uniform": "uniform",
    "unif": "uniform",
    "pointmass": "pointmass",
    "point": "pointmass",
    "dirac": "pointmass",
}


def _split_spec(text: str) -> tuple[str, tuple[float, ...]]:
    m = _SPEC_RE.match(text)
    if not m:
        raise ConfigError(f"cannot parse distribution {text!r}; expected name(p1,p2)")
    name = _ALIASES.get(m.group(1).lower())
    if name is None:
        raise ConfigError(f"unknown distribution family {m.group(1)!r}")
    try:
        args = tuple(float(v) for v in m.group(2).split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"non-numeric parameter in {text!r}") from exc
    return name, args


def parse_claim_model(text: str) -> ClaimModel:
    """Parse ``"exponential(1)"``, ``"weibull(2,1)"`` or ``"gamma(2,2)"``."""
    name, args = _split_spec(text)
    try:
        return ClaimModel(name, args)
    except (ValueError, DomainError) as exc:
        raise ConfigError(f"invalid claim model {text!r}: {exc}") from exc


def parse_prior(text: str) -> PriorSpec:
    name, args = _split_spec(text)
    try:
        return PriorSpec(name, args)
    except (ValueError, DomainError) as exc:
        raise ConfigError(f"invalid prior {text!r}: {exc}") from exc


def empirical_ks(values: Sequence[float], model) -> float:
    """Kolmogorov distance between the empirical cdf of ``values`` and ``model``."""
    x = np.sort(np.asarray(values, dtype=float))
    n = x.size
    f = np.asarray(model.cdf(x))
    upper = np.arange(1, n + 1) / n - f
    lower = f - np.arange(n) / n
    return float(max(upper.max(), lower.max()))
