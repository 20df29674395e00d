"""Reinsurer-optimal contract under exponential utility of terminal wealth.

The reinsurer receives ``I(X) = X - alpha min(X, M)`` per claim and the
expected-value premium on it.  Its expected utility is maximized by
minimizing

    g1(alpha, M) = int_0^M exp(beta (1-alpha) x) dF + int_M^inf exp(beta (x - alpha M)) dF
                   - beta (1+theta) [int_0^M (1-alpha) x dF + int_M^inf (x - alpha M) dF].

Both first-order conditions below are the analytic derivatives of this g1.
The M-condition reads ``int_M^inf exp(beta (x - alpha M)) dF = (1+theta) S(M)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .contract import ContractParams
from .errors import NewtonStalled
from .integrals import (
    cumulative_exp_integrals,
    cumulative_moment,
    lower_integral,
    require_exp_moment,
    tail_integral,
)
from .utility import UtilityConfig

logger = logging.getLogger(__name__)

__all__ = [
    "ReinsurerSolveResult",
    "g1",
    "g1_grid",
    "g1_gradient",
    "hessian_reinsurer",
    "solve_reinsurer",
    "init_box",
]

FOC_TOL = 1e-8


@dataclass
class ReinsurerSolveResult:
    params: ContractParams
    objective_value: float
    hessian: np.ndarray
    hessian_det: float
    hessian_ok: bool
    iterations: int
    converged: bool
    foc_residual: tuple
    cap_tail_prob: float  # S(M): chance a claim reaches the cap
    tail_error: float
    projected: bool = False  # optimum on the alpha = 0 or alpha = 1 face


def _one(x):
    return 1.0


def _tilted_tail(model, beta, c: ContractParams, *, with_error=False):
    """``int_M^inf exp(beta (x - alpha M)) dF``."""
    a, m = c.alpha, c.cap_M
    # exp(beta (x - a M)) = exp(beta (1 - a) M) * exp(beta (x - M))
    out = tail_integral(model, _one, m, tilt=beta, with_error=with_error)
    lift = math.exp(beta * (1.0 - a) * m)
    if with_error:
        return out[0] * lift, out[1] * lift
    return out * lift


def g1(c: ContractParams, model, cfg: UtilityConfig, *, with_error=False):
    """Reinsurer objective; ``with_error`` also returns the tail-quadrature bound."""
    b = cfg.beta
    require_exp_moment(model, b)
    a, m = c.alpha, c.cap_M
    s = 1.0 - a
    body = lower_integral(model, lambda x: math.exp(b * s * x), m)
    tail, err = _tilted_tail(model, b, c, with_error=True)
    prem_low = s * lower_integral(model, lambda x: x, m)
    prem_high, err2 = tail_integral(model, lambda x: x - a * m, m, with_error=True)
    value = body + tail - b * (1.0 + cfg.loading) * (prem_low + prem_high)
    if with_error:
        return value, err + b * (1.0 + cfg.loading) * err2
    return value


def g1_grid(alphas, ms, model, cfg: UtilityConfig) -> np.ndarray:
    """g1 on the tensor grid ``alphas x ms`` (rows alpha, columns M)."""
    b = cfg.beta
    require_exp_moment(model, b)
    alphas = np.asarray(alphas, dtype=float)
    ms = np.asarray(ms, dtype=float)
    body = cumulative_exp_integrals(model, b * (1.0 - alphas), ms)
    tilt = np.array([tail_integral(model, _one, m, tilt=b) for m in ms])
    first_low = cumulative_moment(model, ms)
    first_high = np.array([tail_integral(model, lambda x: x, m) for m in ms])
    surv = np.asarray(model.sf(ms))
    A = alphas[:, None]
    M = ms[None, :]
    # exp(b (x - a M)) = exp(b (x - M)) * exp(b (1 - a) M)
    tail = tilt[None, :] * np.exp(b * (1.0 - A) * M)
    prem = (1.0 - A) * first_low[None, :] + first_high[None, :] - A * M * surv[None, :]
    return body + tail - b * (1.0 + cfg.loading) * prem


def g1_gradient(c: ContractParams, model, cfg: UtilityConfig) -> tuple[float, float]:
    b = cfg.beta
    k = 1.0 + cfg.loading
    a, m = c.alpha, c.cap_M
    tail = _tilted_tail(model, b, c)
    surv = float(model.sf(m))
    tilted = lower_integral(model, lambda x: x * math.exp(b * (1.0 - a) * x), m)
    first = lower_integral(model, lambda x: x, m)
    d_alpha = -b * tilted - b * m * tail + b * k * (first + m * surv)
    d_m = -b * a * tail + b * k * a * surv
    return d_alpha, d_m


def hessian_reinsurer(c: ContractParams, model, cfg: UtilityConfig):
    """``(H1, det H1)`` with entries a11, a12 = a21, a22 of the reinsurer problem."""
    b = cfg.beta
    require_exp_moment(model, b)
    k = 1.0 + cfg.loading
    a, m = c.alpha, c.cap_M
    tail = _tilted_tail(model, b, c)
    surv = float(model.sf(m))
    dens = float(model.pdf(m))
    a11 = b * b * lower_integral(model, lambda x: x * x * math.exp(b * (1.0 - a) * x), m)
    a11 += b * b * m * m * tail
    a12 = (-1.0 + b * a * m) * b * tail + b * k * surv
    a22 = b * b * a * a * tail + b * a * math.exp(b * (1.0 - a) * m) * dens - b * a * k * dens
    H = np.array([[a11, a12], [a12, a22]])
    return H, float(a11 * a22 - a12 * a12)


def init_box(model) -> tuple[tuple[float, float], tuple[float, float]]:
    """Search box ``([0, 1], [q_0.5, q_(1-1e-6)])`` for the starting grid."""
    return (0.0, 1.0), (float(model.quantile(0.5)), float(model.quantile(1 - 1e-6)))


def _residual(x, model, cfg):
    return np.array(g1_gradient(ContractParams(x[0], x[1]), model, cfg))


def _jacobian(x, r0, model, cfg):
    J = np.empty((2, 2))
    steps = (1e-6, 1e-6 * max(1.0, x[1]))
    for j, h in enumerate(steps):
        up = x.copy()
        dn = x.copy()
        up[j] += h
        dn[j] -= h
        # one-sided at the edges of the domain
        if j == 0:
            up[0], dn[0] = min(up[0], 1.0), max(dn[0], 0.0)
        elif dn[1] <= 0.0:
            dn[1] = x[1]
        r_up = _residual(up, model, cfg)
        r_dn = r0 if dn[j] == x[j] else _residual(dn, model, cfg)
        J[:, j] = (r_up - r_dn) / (up[j] - dn[j])
    return J


def _on_face(x, r) -> bool:
    """Grid start on an alpha face with the gradient pointing out of [0, 1].

    On the alpha = 0 face the whole claim is ceded and M drops out, so the
    M-residual vanishes there identically.
    """
    out = (x[0] == 0.0 and r[0] > 0.0) or (x[0] == 1.0 and r[0] < 0.0)
    return bool(out and abs(r[1]) < FOC_TOL)


def _converged(x, r, cfg) -> bool:
    """Both residuals below FOC_TOL, and the M-condition also after dividing
    by ``beta * alpha`` (its tail-balance form)."""
    if np.max(np.abs(r)) >= FOC_TOL:
        return False
    scale = cfg.beta * x[0]
    return scale == 0.0 or abs(r[1]) / scale < FOC_TOL


def solve_reinsurer(
    model,
    cfg: UtilityConfig,
    *,
    n_init: int = 60,
    max_iter: int = 200,
    strict: bool = False,
) -> ReinsurerSolveResult:
    """Reinsurer-optimal ``(alpha, M)`` by damped Newton on the gradient of g1.

    Newton starts from the minimum of g1 on an ``n_init x n_init`` grid over
    :func:`init_box`, uses a central-difference Jacobian, and halves each step
    (down to 2**-20) until the residual norm drops.  It stops once both
    first-order residuals are below 1e-8 in absolute value and the
    M-residual divided by ``beta * alpha`` is too.

    When the best grid point sits on an alpha face and the gradient points
    out of the box there, that point is returned with ``projected=True`` and
    Newton is skipped.  When the residual target is missed after ``max_iter``
    iterations the best grid point is returned with ``converged=False``, or
    :class:`NewtonStalled` is raised if ``strict``.

    Raises
    ------
    DivergentMoment
        If ``E[exp(beta X)]`` is infinite for the claim model.
    """
    require_exp_moment(model, cfg.beta)
    (a_lo, a_hi), (m_lo, m_hi) = init_box(model)
    alphas = np.linspace(a_lo, a_hi, n_init)
    ms = np.linspace(m_lo, m_hi, n_init)
    G = g1_grid(alphas, ms, model, cfg)
    i, j = np.unravel_index(np.argmin(G), G.shape)
    start = np.array([alphas[i], ms[j]])

    x = start.copy()
    r = _residual(x, model, cfg)
    it = 0
    projected = _on_face(x, r)
    while not projected and not _converged(x, r, cfg) and it < max_iter:
        it += 1
        J = _jacobian(x, r, model, cfg)
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, -r, rcond=None)[0]
        lam = 1.0
        norm = np.linalg.norm(r)
        while True:
            trial = x + lam * step
            if 0.0 <= trial[0] <= 1.0 and trial[1] > 0.0:
                r_trial = _residual(trial, model, cfg)
                if np.linalg.norm(r_trial) < norm or _converged(trial, r_trial, cfg):
                    break
            lam *= 0.5
            if lam < 2.0**-20:
                trial = None
                break
        if trial is None:
            break
        x, r = trial, r_trial

    converged = _converged(x, r, cfg)
    if projected:
        logger.info("reinsurer optimum on the alpha=%g face (dg1/dalpha=%.3g)", x[0], r[0])
    elif not converged:
        msg = f"Newton stalled after {it} iterations, residual {np.max(np.abs(r)):.3g}"
        if strict:
            raise NewtonStalled(msg)
        logger.warning("%s; returning best grid point", msg)
        x = start
        r = _residual(x, model, cfg)

    params = ContractParams(float(x[0]), float(x[1]))
    H, det = hessian_reinsurer(params, model, cfg)
    value, err = g1(params, model, cfg, with_error=True)
    return ReinsurerSolveResult(
        params=params,
        objective_value=value,
        hessian=H,
        hessian_det=det,
        hessian_ok=bool(det > 0 and H[0, 0] > 0),
        iterations=it,
        converged=converged,
        foc_residual=(float(r[0]), float(r[1])),
        cap_tail_prob=float(model.sf(params.cap_M)),
        tail_error=err,
        projected=projected,
    )
