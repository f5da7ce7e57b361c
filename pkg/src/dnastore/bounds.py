"""Closed-form error bounds and information-density factors, evaluated in log space."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .mathkit import MORTICI_OMEGA, log_factorial, log_gamma
from .params import DerivedSizes, ParameterError, SystemParams


def _log_base(base: float | None) -> float:
    return 1.0 if base is None or base == math.e else math.log(base)


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def _exp_sum(*logs: float) -> float:
    top = max(logs)
    if top == -math.inf:
        return 0.0
    if top > 700:
        return math.inf
    return sum(math.exp(v) for v in logs)


def phi(M: float, beta: float, rho: float, alphabet_size: int) -> float:
    """(u - 1) / (2u + 1) with u = M**(1 - (1+rho) beta ln|A|)."""
    if M < 2:
        raise ParameterError("phi needs M >= 2")
    e = (1.0 - (1.0 + rho) * beta * math.log(alphabet_size)) * math.log(M)
    if e >= 0:
        v = math.exp(-e)
        return -math.expm1(-e) / (2.0 + v)
    u = math.exp(e)
    return math.expm1(e) / (2.0 * u + 1.0)


@dataclass(frozen=True)
class BoundBreakdown:
    term1_log: float
    term2_log: float
    total: float
    phi: float
    M: int
    alphabet_size: int
    beta: float
    xi: float
    rho: float

    @property
    def term1(self) -> float:
        return math.exp(self.term1_log) if self.term1_log < 700 else math.inf

    @property
    def term2(self) -> float:
        return math.exp(self.term2_log) if self.term2_log < 700 else math.inf

    def to_dict(self) -> dict:
        return {
            "M": self.M, "alphabet": self.alphabet_size, "beta": self.beta,
            "xi": self.xi, "rho": self.rho,
            "term1_log": self.term1_log, "term2_log": self.term2_log,
            "term1": self.term1, "term2": self.term2,
            "total": self.total, "phi": self.phi,
        }


def pc_error_bound(params: SystemParams, sizes: DerivedSizes | None = None) -> BoundBreakdown:
    """Two-term partition-code bound: zero-count term plus mis-ordering term.

    The formula is written in terms of the continuous type count M**(beta ln|A|);
    `sizes` is accepted for symmetry with the other evaluators and is not used.
    """
    lnM = math.log(params.M)
    c1 = params.type_exponent
    rho, xi = params.rho, params.xi
    u = math.exp((1.0 - (1.0 + rho) * c1) * lnM)
    w = math.exp((1.0 - (1.0 + 2.0 * rho) * c1) * lnM)
    ph = phi(params.M, params.beta, rho, params.alphabet_size)
    t1 = c1 * lnM - xi * math.floor(u)
    t2 = (2.0 - rho) * c1 * lnM - xi * ph * w
    return BoundBreakdown(t1, t2, _clamp01(_exp_sum(t1, t2)), ph,
                          params.M, params.alphabet_size, params.beta, xi, rho)


def pc_error_bound_simplified(params: SystemParams, sizes: DerivedSizes | None = None) -> float:
    """2 M**((2-rho) c1) exp(-(xi/3) M**(1-(1+2rho) c1)); valid once M**(1-(1+rho) c1) >= 4."""
    lnM = math.log(params.M)
    c1 = params.type_exponent
    rho = params.rho
    if (1.0 - (1.0 + rho) * c1) * lnM < math.log(4.0) - 1e-12:
        raise ParameterError("simplified bound needs M**(1 - (1+rho) beta ln|A|) >= 4")
    w = math.exp((1.0 - (1.0 + 2.0 * rho) * c1) * lnM)
    return _clamp01(_exp_sum(math.log(2.0) + (2.0 - rho) * c1 * lnM - params.xi / 3.0 * w))


@dataclass(frozen=True)
class RcBoundConstants:
    c0: float
    c1: float
    c2: float
    delta: float


def rc_constants(params: SystemParams, delta: float) -> RcBoundConstants:
    c1 = params.type_exponent
    return RcBoundConstants(1.0 - c1, c1, 2.0 + 2.0 * params.xi - 0.5 * math.log(params.xi), delta)


@dataclass(frozen=True)
class RcBound:
    term1_log: float
    term2: float
    total: float
    constants: RcBoundConstants

    @property
    def term1(self) -> float:
        return math.exp(self.term1_log) if self.term1_log < 700 else math.inf


def rc_bound_terms(params: SystemParams, sizes: DerivedSizes | None, delta: float) -> RcBound:
    if delta < 0:
        raise ParameterError("delta must be nonnegative")
    xiM = params.xi * params.M
    if xiM <= math.e:
        raise ParameterError("the random-coding bound needs xi * M > e")
    k = rc_constants(params, delta)
    lnM = math.log(params.M)
    loglog = math.log(math.log(xiM))
    t1 = (math.log(2.0) + 0.5 * math.log1p(xiM * math.exp((k.c0 - 1.0) * lnM))
          + (k.c2 + loglog - delta * k.c0 * lnM) * math.exp(k.c1 * lnM))
    t2 = 1.0 / loglog
    total = 1.0 if t1 > 700 else _clamp01(math.exp(t1) + t2)
    return RcBound(t1, t2, total, k)


def rc_error_bound(params: SystemParams, sizes: DerivedSizes | None, delta: float) -> float:
    """Random-coding bound for a codebook of size exp((1/2 - delta) n ln(M/n)), clamped to 1."""
    return rc_bound_terms(params, sizes, delta).total


def rc_implied_delta(codebook_size: int, n: float, M: int) -> float:
    """delta for which exp((1/2 - delta) n ln(M/n)) equals the given codebook size."""
    return 0.5 - math.log(codebook_size) / (n * math.log(M / n))


def log_pairwise_factor(n: int, M: int, K: int) -> float:
    """ln B(n, M, K), the pairwise-error prefactor of the random-coding analysis (diagnostic)."""
    if M <= n:
        raise ParameterError("need M > n")
    return (n * math.log(2.0 * MORTICI_OMEGA * math.sqrt(math.pi))
            + K * math.log(M / (M - n))
            + log_gamma(n) - log_gamma(n + K)
            + K * math.log(K) - K
            + 0.5 * n * math.log(K / n))


def rc_density_target(beta: float, alphabet_size: int, base: float | None = None) -> float:
    """(1 - beta log|A|) / 2, with the log taken in `base` (natural by default)."""
    return 0.5 * (1.0 - beta * math.log(alphabet_size) / _log_base(base))


def pc_density_target(beta: float, rho: float, alphabet_size: int, base: float | None = None) -> float:
    return rho * beta * math.log(alphabet_size) / _log_base(base)


def crossing_beta(rho: float, alphabet_size: int, base: float | None = None) -> float:
    """beta at which the two leading factors coincide: beta log|A| = 1/(1 + 2 rho)."""
    return _log_base(base) / ((1.0 + 2.0 * rho) * math.log(alphabet_size))


def log_pc_codebook_size(sizes: DerivedSizes) -> float:
    return float(log_factorial(sizes.n_eff) - sizes.num_subsets * log_factorial(sizes.subset_size))


def pc_exact_density(sizes: DerivedSizes, M: int) -> float:
    """ln|C_M| / (n ln M) for the partition code at these sizes."""
    return log_pc_codebook_size(sizes) / (sizes.n * math.log(M))


def stirling_log_bounds(n: int) -> tuple[float, float]:
    """Logs of sqrt(2 pi n)(n/e)**n and sqrt(2 pi e n)(n/e)**n."""
    base = n * (math.log(n) - 1.0)
    lo = 0.5 * math.log(2.0 * math.pi * n) + base
    return lo, lo + 0.5
