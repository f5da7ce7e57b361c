"""System parameters of the shuffling-sampling channel and the integer sizes derived from them."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import mpmath

# Float noise in a user-supplied beta (e.g. 0.5/ln 2) must not drop n = 32 to 31.
_SNAP_RTOL = 1e-12


class ParameterError(ValueError):
    """Raised for parameter tuples that violate the model's preconditions."""


@dataclass(frozen=True)
class SystemParams:
    M: int
    alphabet_size: int
    beta: float
    xi: float
    rho: float

    def __post_init__(self) -> None:
        if not isinstance(self.M, int) or self.M < 1:
            raise ParameterError(f"M must be a positive integer, got {self.M!r}")
        if not isinstance(self.alphabet_size, int) or self.alphabet_size < 2:
            raise ParameterError(f"alphabet_size must be an integer >= 2, got {self.alphabet_size!r}")
        if not self.beta > 0:
            raise ParameterError(f"beta must be positive, got {self.beta!r}")
        if not self.xi > 0:
            raise ParameterError(f"xi must be positive, got {self.xi!r}")
        if not 0.0 <= self.rho <= 1.0:
            raise ParameterError(f"rho must lie in [0, 1], got {self.rho!r}")
        if self.beta * math.log(self.alphabet_size) >= 1.0:
            warnings.warn(
                "beta * ln|A| >= 1: outside the short-molecule regime",
                RuntimeWarning,
                stacklevel=3,
            )

    @property
    def type_exponent(self) -> float:
        """beta * ln|A|, the exponent in n = M**(beta ln|A|)."""
        return self.beta * math.log(self.alphabet_size)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DerivedSizes:
    n: int
    L: int
    K: int
    num_subsets: int
    subset_size: int

    def __post_init__(self) -> None:
        if self.n < 1 or self.L < 1 or self.K < 1:
            raise ParameterError(f"invalid sizes n={self.n}, L={self.L}, K={self.K}")
        if self.num_subsets < 1 or self.subset_size < 1:
            raise ParameterError("num_subsets and subset_size must be positive")
        if self.n_eff > self.n:
            raise ParameterError(f"n_eff={self.n_eff} exceeds n={self.n}")

    @property
    def n_eff(self) -> int:
        return self.num_subsets * self.subset_size

    def to_dict(self) -> dict:
        d = asdict(self)
        d["n_eff"] = self.n_eff
        return d


def snap_floor(x: float) -> int:
    """Floor that treats values within 1e-12 relative below an integer as that integer."""
    r = round(x)
    if abs(x - r) <= _SNAP_RTOL * max(1.0, abs(x)):
        return int(r)
    return math.floor(x)


def snap_ceil(x: float) -> int:
    r = round(x)
    if abs(x - r) <= _SNAP_RTOL * max(1.0, abs(x)):
        return int(r)
    return math.ceil(x)


def num_types(M: int, alphabet_size: int, beta: float) -> int:
    """n = floor(M**(beta ln|A|)), evaluated at 50 digits and clamped to >= 2."""
    with mpmath.workdps(50):
        value = mpmath.exp(mpmath.mpf(beta) * mpmath.log(alphabet_size) * mpmath.log(M))
        n = snap_floor(float(value)) if value < 2**52 else int(mpmath.floor(value))
    return max(n, 2)


def partition_shape(n: int, rho: float) -> tuple[int, int]:
    """(floor(n**rho), floor(n**(1-rho))) for the partition code."""
    if n < 1:
        raise ParameterError("n must be positive")
    s = max(1, snap_floor(n**rho))
    size = max(1, snap_floor(n ** (1.0 - rho)))
    return s, size


def derive(params: SystemParams) -> DerivedSizes:
    n = num_types(params.M, params.alphabet_size, params.beta)
    L = max(1, snap_ceil(params.beta * math.log(params.M))) if params.M > 1 else 1
    K = max(1, round(params.xi * params.M))
    s, size = partition_shape(n, params.rho)
    return DerivedSizes(n=n, L=L, K=K, num_subsets=s, subset_size=size)


def sizes_for_partition(n_eff: int, num_subsets: int, *, n: int | None = None, K: int = 1) -> DerivedSizes:
    """Build sizes directly from an explicit partition shape (codec tooling and tests)."""
    if n_eff < 1 or num_subsets < 1 or n_eff % num_subsets:
        raise ParameterError(f"n_eff={n_eff} is not a positive multiple of num_subsets={num_subsets}")
    return DerivedSizes(n=n if n is not None else n_eff, L=1, K=K,
                        num_subsets=num_subsets, subset_size=n_eff // num_subsets)


def beta_for_types(M: int, alphabet_size: int, n: int) -> float:
    """A beta giving exactly n types at this M (solves floor(M**(beta ln|A|)) = n midway)."""
    if M < 2 or n < 2:
        raise ParameterError("need M >= 2 and n >= 2")
    return math.log(n + 0.5) / (math.log(alphabet_size) * math.log(M))
