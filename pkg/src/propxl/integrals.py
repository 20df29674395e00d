"""Integrals against a claim density.

Pointwise values go through QUADPACK (``scipy.integrate.quad``, adaptive
Gauss-Kronrod).  Tail integrals are taken against the conditional density
``f(a + y) / S(a)`` so that the integrand stays O(1) however deep ``a`` sits
in the tail; the result is rescaled by ``S(a)`` afterwards.  Grid sweeps use a
composite Gauss-Legendre rule, vectorized over all grid nodes at once.
"""

from __future__ import annotations

import math
import warnings
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import DivergentMoment, NumericError

EPSABS = 1e-12
EPSREL = 1e-10
_LIMIT = 400


def _quad(fn, lo, hi, *, epsabs=EPSABS, epsrel=EPSREL, points=None):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(
                fn, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=_LIMIT, points=points
            )
        except integrate.IntegrationWarning as exc:
            # accept a slightly looser answer rather than failing outright
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                val, err = integrate.quad(
                    fn, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=4 * _LIMIT, points=points
                )
            if not math.isfinite(val) or err > max(1e3 * epsabs, 1e3 * epsrel * abs(val)):
                raise NumericError(f"quadrature on [{lo}, {hi}] unreliable: {exc}") from exc
    if not math.isfinite(val):
        raise NumericError(f"non-finite integral on [{lo}, {hi}]")
    return val, err


def lower_integral(model, h: Callable[[float], float], upper: float) -> float:
    """``int_0^upper h(x) dF(x)``."""
    if upper <= 0.0:
        return 0.0

    def integrand(x):
        return h(x) * model.pdf(x)

    return _quad(integrand, 0.0, upper)[0]


def tail_integral(model, h: Callable[[float], float], a: float, *, tilt: float = 0.0, with_error=False):
    """``int_a^inf h(x) exp(tilt (x - a)) dF(x)`` computed relative to ``S(a)``.

    The exponential tilt is folded into the log density so the integrand never
    overflows.  With ``with_error=True`` also returns the absolute error bound
    reported by the quadrature (the infinite range included).
    """
    a = max(float(a), 0.0)
    log_tail = float(model.logsf(a))
    if log_tail == -math.inf:
        return (0.0, 0.0) if with_error else 0.0

    def integrand(y):
        expo = tilt * y + float(model.logpdf(a + y)) - log_tail
        if not expo > -745.0:
            return 0.0
        return h(a + y) * math.exp(expo)

    val, err = _quad(integrand, 0.0, math.inf, epsabs=0.0)
    scale = math.exp(log_tail)
    if with_error:
        return val * scale, err * scale
    return val * scale


def require_exp_moment(model, beta: float) -> None:
    """Raise :class:`DivergentMoment` unless ``E[exp(beta X)]`` is finite."""
    bound = model.exp_moment_abscissa()
    if beta >= bound:
        raise DivergentMoment(
            f"E[exp({beta:g} X)] diverges for {model}: need beta < {bound:g}"
        )


_GL_X, _GL_W = np.polynomial.legendre.leggauss(32)


def cumulative_exp_integrals(model, rates, uppers) -> np.ndarray:
    """Matrix ``out[i, j] = int_0^{uppers[j]} exp(rates[i] x) dF(x)``.

    ``uppers`` must be increasing.  Each gap between consecutive uppers gets a
    32-node Gauss-Legendre panel; the panels are then accumulated.
    """
    rates = np.asarray(rates, dtype=float)
    uppers = np.asarray(uppers, dtype=float)
    if np.any(np.diff(uppers) <= 0):
        raise ValueError("uppers must be strictly increasing")
    edges = np.concatenate([[0.0], uppers])
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    x = (lo + half)[:, None] + half[:, None] * _GL_X[None, :]
    dens = model.pdf(x) * (half[:, None] * _GL_W[None, :])
    panels = np.einsum("rpk,pk->rp", np.exp(rates[:, None, None] * x[None]), dens)
    return np.cumsum(panels, axis=1)


def cumulative_moment(model, uppers) -> np.ndarray:
    """``int_0^u x dF(x)`` for each ``u`` in increasing ``uppers``."""
    uppers = np.asarray(uppers, dtype=float)
    edges = np.concatenate([[0.0], uppers])
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    x = (lo + half)[:, None] + half[:, None] * _GL_X[None, :]
    return np.cumsum((x * model.pdf(x) * half[:, None] * _GL_W[None, :]).sum(axis=1))
