"""Numeric primitives: divergences, log-Gamma, Dirichlet product moments and inequality checks.

All quantities use natural logarithms. Divergences follow the usual conventions
0 ln(0/p) = 0 and q > 0 over p = 0 gives +inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln


@dataclass(frozen=True)
class Tolerances:
    special_rtol: float = 1e-12
    recurrence_rtol: float = 1e-10
    pmf_atol: float = 1e-12
    mc_sigmas: float = 3.0


TOL = Tolerances()

# Mortici's constant e * sqrt(3 / (7 pi)).
MORTICI_OMEGA = math.e * math.sqrt(3.0 / (7.0 * math.pi))
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def as_pmf(probs: Sequence[float], atol: float = TOL.pmf_atol) -> np.ndarray:
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("a pmf must be a non-empty 1-d sequence")
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("pmf entries must lie in [0, 1]")
    if abs(p.sum() - 1.0) > atol:
        raise ValueError(f"pmf sums to {p.sum()!r}, not 1")
    return p


def _pair(q, p) -> tuple[np.ndarray, np.ndarray]:
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    if q.shape != p.shape:
        raise ValueError(f"length mismatch: {q.shape} vs {p.shape}")
    return q, p


def kl_divergence(q, p) -> float:
    """D(q || p) in nats."""
    q, p = _pair(q, p)
    support = q > 0
    if np.any(p[support] == 0):
        return math.inf
    qs, ps = q[support], p[support]
    return max(0.0, float(np.sum(qs * (np.log(qs) - np.log(ps)))))


def chi2_divergence(q, p) -> float:
    q, p = _pair(q, p)
    if np.any((q > 0) & (p == 0)):
        return math.inf
    mask = p > 0
    return float(np.sum((q[mask] - p[mask]) ** 2 / p[mask]))


def log_gamma(t):
    """ln Gamma(t) for t > 0; accepts scalars or arrays."""
    arr = np.asarray(t, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError("log_gamma requires t > 0")
    out = gammaln(arr)
    return float(out) if out.ndim == 0 else out


def log_factorial(k):
    return log_gamma(np.asarray(k, dtype=float) + 1.0)


def log_dirichlet_product_moment(alphas, betas) -> float:
    a = np.asarray(alphas, dtype=float)
    b = np.asarray(betas, dtype=float)
    if a.shape != b.shape:
        raise ValueError("alphas and betas must have the same length")
    if np.any(~(a > 0)):
        raise ValueError("alphas must be positive")
    if np.any(b < 0):
        raise ValueError("betas must be nonnegative")
    if not np.any(b):
        return 0.0
    return float(
        gammaln(a.sum()) - gammaln((a + b).sum()) + np.sum(gammaln(a + b) - gammaln(a))
    )


def dirichlet_product_moment(alphas, betas) -> float:
    """E[prod X_i**beta_i] for X ~ Dir(alphas), via log-Gamma sums."""
    return math.exp(log_dirichlet_product_moment(alphas, betas))


def _check_positive(*xs: float) -> None:
    for x in xs:
        if not x > 0:
            raise ValueError(f"expected a positive value, got {x!r}")


def am_gm_gap(a: float, b: float) -> float:
    _check_positive(a, b)
    return 0.5 * (a + b) - math.sqrt(a * b)


def am_gm_gap_lower_bound(a: float, b: float) -> float:
    """(a - b)**2 / (8 max(a, b)), which never exceeds (a + b)/2 - sqrt(ab)."""
    _check_positive(a, b)
    return (a - b) ** 2 / (8.0 * max(a, b))


def gordon_bounds_log(t: float) -> tuple[float, float]:
    """Log of the lower and upper Stirling-type bounds on Gamma(t)."""
    _check_positive(t)
    lo = _HALF_LOG_2PI + (t - 0.5) * math.log(t) - t
    return lo, lo + 1.0 / (12.0 * t)


def mortici_bound_log(x: float) -> float:
    """Log of omega * sqrt(2 pi (x + 1/6)) * (x/e)**x."""
    if not (x == 0 or x >= 1):
        raise ValueError("the Gamma(1+x) bound is stated for x = 0 or x >= 1")
    xlogx = 0.0 if x == 0 else x * (math.log(x) - 1.0)
    return math.log(MORTICI_OMEGA) + 0.5 * math.log(2.0 * math.pi * (x + 1.0 / 6.0)) + xlogx


def gordon_check(t: float) -> bool:
    lo, hi = gordon_bounds_log(t)
    lg = math.lgamma(t)
    slack = 4e-16 * max(1.0, abs(lg))
    return lo <= lg + slack and lg <= hi + slack


def mortici_check(x: float) -> bool:
    lg = math.lgamma(1.0 + x)
    return lg <= mortici_bound_log(x) + 4e-16 * max(1.0, abs(lg))


def gamma_bound_checks(t: float, x: float | None = None) -> tuple[bool, bool]:
    """(Gordon sandwich holds at t, Mortici bound holds at x); x defaults to t."""
    return gordon_check(t), mortici_check(t if x is None else x)
