"""Insurer-optimal contract under exponential utility of terminal wealth.

With compound-Poisson claims and the expected-value premium on the retained
part, maximizing ``E[-exp(-beta U_t)]`` is equivalent to minimizing

    g0(alpha, M) = -beta (1+theta) lam t [alpha int_0^M x dF + alpha M S(M)]
                   + lam t [int_0^M exp(alpha beta x) dF + exp(alpha beta M) S(M)].

The M-condition is closed form, ``alpha beta M = ln(1 + theta)``.  Eliminating
alpha leaves a scalar equation in M:

    (1+theta) int_0^M x dF = int_0^M x exp(ln(1+theta) x / M) dF.

Since ``exp(ln(1+theta) x / M) < 1 + theta`` for ``x < M``, the right side is
always the smaller one, so that equation has no positive root for any claim
law: along the M-optimal curve g0 keeps decreasing in alpha, and the
constrained optimum is the projection ``alpha = 1, M = ln(1+theta) / beta``.
The bracketing scan is still run; its sign pattern is what licenses the
projection and it is returned as a diagnostic.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .contract import ContractParams
from .errors import DegenerateLoading, NoRootFound
from .integrals import cumulative_exp_integrals, cumulative_moment, lower_integral
from .utility import UtilityConfig

logger = logging.getLogger(__name__)

__all__ = ["SolveResult", "g0", "g0_grid", "g0_gradient", "hessian_insurer", "solve_insurer"]


@dataclass
class SolveResult:
    params: ContractParams
    objective_value: float
    hessian: np.ndarray
    hessian_det: float
    hessian_ok: bool
    projected: bool
    iterations: int
    foc_residual: tuple = (0.0, 0.0)
    scan: dict = field(default_factory=dict, repr=False)


def g0(c: ContractParams, model, cfg: UtilityConfig) -> float:
    a, m, b = c.alpha, c.cap_M, cfg.beta
    surv = float(model.sf(m))
    first = lower_integral(model, lambda x: x, m)
    mgf = lower_integral(model, lambda x: math.exp(a * b * x), m)
    lt = cfg.lam_t
    return -b * (1.0 + cfg.loading) * lt * a * (first + m * surv) + lt * (
        mgf + math.exp(a * b * m) * surv
    )


def g0_grid(alphas, ms, model, cfg: UtilityConfig) -> np.ndarray:
    """g0 on the tensor grid ``alphas x ms`` (rows alpha, columns M)."""
    alphas = np.asarray(alphas, dtype=float)
    ms = np.asarray(ms, dtype=float)
    b, lt = cfg.beta, cfg.lam_t
    surv = np.asarray(model.sf(ms))
    first = cumulative_moment(model, ms)
    mgf = cumulative_exp_integrals(model, alphas * b, ms)
    A = alphas[:, None]
    return -b * (1 + cfg.loading) * lt * A * (first + ms * surv)[None, :] + lt * (
        mgf + np.exp(A * b * ms[None, :]) * surv[None, :]
    )


def g0_gradient(c: ContractParams, model, cfg: UtilityConfig) -> tuple[float, float]:
    """``(dg0/dalpha, dg0/dM)``; both vanish at an interior optimum."""
    a, m, b = c.alpha, c.cap_M, cfg.beta
    lt, k = cfg.lam_t, 1.0 + cfg.loading
    surv = float(model.sf(m))
    first = lower_integral(model, lambda x: x, m)
    tilted = lower_integral(model, lambda x: x * math.exp(a * b * x), m)
    tilt_m = math.exp(a * b * m)
    d_alpha = -b * k * lt * (first + m * surv) + lt * b * (tilted + m * tilt_m * surv)
    d_m = lt * a * b * surv * (tilt_m - k)
    return d_alpha, d_m


def hessian_insurer(c: ContractParams, model, cfg: UtilityConfig):
    """Second-order matrix of g0 as used at a stationary M (returns ``(H, det)``)."""
    a, m, b = c.alpha, c.cap_M, cfg.beta
    lt = cfg.lam_t
    surv = float(model.sf(m))
    tilt_m = math.exp(a * b * m)
    a11 = lt * b**2 * lower_integral(model, lambda x: x * x * math.exp(a * b * x), m) + (
        lt * b**2 * m**2 * tilt_m * surv
    )
    a12 = lt * a * b**2 * m * tilt_m * surv
    a22 = lt * a**2 * b**2 * tilt_m * surv
    H = np.array([[a11, a12], [a12, a22]])
    return H, float(a11 * a22 - a12 * a12)


def _eliminated_foc(m: float, model, log_k: float, k: float) -> float:
    tilted = lower_integral(model, lambda x: x * math.exp(log_k * x / m), m)
    plain = lower_integral(model, lambda x: x, m)
    return tilted - k * plain


def solve_insurer(model, cfg: UtilityConfig, *, n_scan: int = 200) -> SolveResult:
    """Insurer-optimal ``(alpha, M)``.

    Raises
    ------
    DegenerateLoading
        If ``cfg.loading <= 0``: then ``alpha M`` is driven to zero.
    NoRootFound
        If the scan shows no sign change and the sign does not point at the
        ``alpha = 1`` boundary.
    """
    if cfg.loading <= 0:
        raise DegenerateLoading(
            f"loading {cfg.loading:g} <= 0 forces alpha*M = 0; no interior optimum"
        )
    k = 1.0 + cfg.loading
    log_k = math.log(k)
    lo, hi = float(model.quantile(1e-3)), float(model.quantile(1 - 1e-4))
    grid = np.geomspace(lo, hi, n_scan)
    values = np.array([_eliminated_foc(m, model, log_k, k) for m in grid])
    scan = {"m": grid, "value": values}
    iterations = n_scan

    sign_change = np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)
    projected = False
    if sign_change.size:
        i = int(sign_change[0])
        m_hat, info = optimize.brentq(
            _eliminated_foc, grid[i], grid[i + 1], args=(model, log_k, k),
            xtol=1e-14, rtol=4 * np.finfo(float).eps, full_output=True,
        )
        iterations += info.iterations
        a_hat = log_k / (cfg.beta * m_hat)
        if a_hat > 1.0:
            a_hat, m_hat, projected = 1.0, log_k / cfg.beta, True
    elif np.all(values < 0):
        # dg0/dalpha < 0 along the whole M-optimal curve: push alpha to 1
        a_hat, m_hat, projected = 1.0, log_k / cfg.beta, True
    else:
        raise NoRootFound(
            "no sign change of the eliminated first-order condition on "
            f"[{lo:.4g}, {hi:.4g}] and no boundary solution",
            scan=scan,
        )

    params = ContractParams(a_hat, m_hat)
    H, det = hessian_insurer(params, model, cfg)
    res = g0_gradient(params, model, cfg)
    if projected:
        logger.info("insurer optimum projected onto alpha=1 (dg0/dalpha=%.3g)", res[0])
    return SolveResult(
        params=params,
        objective_value=g0(params, model, cfg),
        hessian=H,
        hessian_det=det,
        hessian_ok=bool(det > 0 and H[0, 0] > 0),
        projected=projected,
        iterations=iterations,
        foc_residual=res,
        scan=scan,
    )
