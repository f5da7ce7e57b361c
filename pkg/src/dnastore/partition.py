"""Deterministic partition code: ordered equal-size partitions of molecule types.

Types in subset i receive a copy count that decreases arithmetically with i, and
the decoder recovers the partition by sorting the observed read counts.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .channel import CountVector, ReadCounts
from .params import DerivedSizes, ParameterError


class InfeasibleParameters(ParameterError):
    """The copy-count ladder cannot separate the subsets at this M."""


class DecodeFailure(Exception):
    """Base class for decoder failures."""


class ZeroCountError(DecodeFailure):
    """Too many molecule types received no reads."""

    def __init__(self, zeros: int):
        super().__init__(f"{zeros} molecule type(s) received zero reads")
        self.zeros = zeros


@dataclass(frozen=True)
class WeightLadder:
    weights: tuple[Fraction, ...]
    common_difference: Fraction

    @property
    def num_subsets(self) -> int:
        return len(self.weights)


def weight_ladder(num_subsets: int) -> WeightLadder:
    """Arithmetic weights R(l) = 1/s**2 + (2/s**2)(s - l), l = 1..s, as exact fractions."""
    if num_subsets < 1:
        raise ValueError("num_subsets must be positive")
    s = num_subsets
    last = Fraction(1, s * s)
    d = Fraction(2, s * s)
    return WeightLadder(tuple(last + d * (s - l) for l in range(1, s + 1)), d)


@dataclass(frozen=True)
class SubsetCounts:
    """Copies per type: `first_subset_counts` for subset 1, `N[i-2]` for subset i >= 2."""

    N: tuple[int, ...]
    first_subset_counts: tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.first_subset_counts) + len(self.first_subset_counts) * sum(self.N)

    def per_subset(self) -> list[int]:
        """Nominal count per subset (subset 1 reported by its smallest share)."""
        return [min(self.first_subset_counts), *self.N]


def subset_counts(M: int, sizes: DerivedSizes) -> SubsetCounts:
    """Floor-quantized copy counts summing to exactly M.

    Subsets 2..s get floor(M R(i) / subset_size) copies per type. Whatever is left
    goes to the subset-1 types, spread evenly with the extra units on the lowest
    type indices.
    """
    s, size = sizes.num_subsets, sizes.subset_size
    if M < sizes.n_eff:
        raise InfeasibleParameters(f"M={M} is smaller than n_eff={sizes.n_eff}")
    ladder = weight_ladder(s)
    N = tuple(math.floor(M * r / size) for r in ladder.weights[1:])
    remaining = M - size * sum(N)
    base, extra = divmod(remaining, size)
    first = tuple(base + 1 if j < extra else base for j in range(size))
    ladder_counts = [min(first), *N]
    if ladder_counts[-1] < 1:
        raise InfeasibleParameters(f"subset {s} would receive zero copies at M={M}")
    for i in range(len(ladder_counts) - 1):
        if ladder_counts[i] <= ladder_counts[i + 1]:
            raise InfeasibleParameters(
                f"copy counts of subsets {i + 1} and {i + 2} do not separate at M={M}"
            )
    return SubsetCounts(N, first)


def codebook_size(sizes: DerivedSizes) -> int:
    """n_eff! / (subset_size!)**num_subsets, exactly."""
    return math.factorial(sizes.n_eff) // math.factorial(sizes.subset_size) ** sizes.num_subsets


@dataclass(frozen=True)
class PartitionMessage:
    """assignment[t] is the 1-based subset holding molecule type t."""

    assignment: tuple[int, ...]

    @classmethod
    def of(cls, assignment: Sequence[int]) -> "PartitionMessage":
        return cls(tuple(int(a) for a in assignment))

    def subsets(self) -> list[list[int]]:
        s = max(self.assignment)
        out: list[list[int]] = [[] for _ in range(s)]
        for t, a in enumerate(self.assignment):
            out[a - 1].append(t)
        return out


def check_assignment(assignment: Sequence[int], sizes: DerivedSizes) -> None:
    if len(assignment) != sizes.n_eff:
        raise ValueError(f"assignment has length {len(assignment)}, expected n_eff={sizes.n_eff}")
    tally = [0] * sizes.num_subsets
    for a in assignment:
        if not 1 <= a <= sizes.num_subsets:
            raise ValueError(f"subset index {a} outside 1..{sizes.num_subsets}")
        tally[a - 1] += 1
    if any(c != sizes.subset_size for c in tally):
        raise ValueError(f"every subset must hold exactly {sizes.subset_size} types, got {tally}")


def unrank(index: int, sizes: DerivedSizes) -> PartitionMessage:
    """The index-th assignment vector in lexicographic order."""
    total = codebook_size(sizes)
    if not 0 <= index < total:
        raise ValueError(f"message index {index} outside [0, {total})")
    caps = [sizes.subset_size] * sizes.num_subsets
    remaining = sizes.n_eff
    count = total  # completions consistent with the prefix chosen so far
    out = []
    for _ in range(sizes.n_eff):
        for v, c in enumerate(caps):
            if c == 0:
                continue
            sub = count * c // remaining
            if index < sub:
                out.append(v + 1)
                caps[v] -= 1
                count = sub
                break
            index -= sub
        remaining -= 1
    return PartitionMessage(tuple(out))


def rank(msg: PartitionMessage, sizes: DerivedSizes) -> int:
    check_assignment(msg.assignment, sizes)
    caps = [sizes.subset_size] * sizes.num_subsets
    remaining = sizes.n_eff
    count = codebook_size(sizes)
    index = 0
    for a in msg.assignment:
        for v in range(a - 1):
            index += count * caps[v] // remaining
        count = count * caps[a - 1] // remaining
        caps[a - 1] -= 1
        remaining -= 1
    return index


def encode(msg: PartitionMessage, counts: SubsetCounts, sizes: DerivedSizes) -> CountVector:
    check_assignment(msg.assignment, sizes)
    out = [0] * sizes.n
    j = 0
    for t, a in enumerate(msg.assignment):
        if a == 1:
            out[t] = counts.first_subset_counts[j]
            j += 1
        else:
            out[t] = counts.N[a - 2]
    return CountVector(tuple(out))


def decode(reads: ReadCounts, sizes: DerivedSizes, strict_zero_rule: bool = True) -> PartitionMessage:
    """Sort the first n_eff read counts (descending, ties by type index) and cut into subsets.

    Raises ZeroCountError when any count is zero (strict rule) or when more than
    subset_size counts are zero (relaxed rule).
    """
    if len(reads) < sizes.n_eff:
        raise ValueError(f"need counts for at least n_eff={sizes.n_eff} types")
    U = reads.counts[: sizes.n_eff]
    zeros = sum(1 for u in U if u == 0)
    if (strict_zero_rule and zeros) or zeros > sizes.subset_size:
        raise ZeroCountError(zeros)
    order = sorted(range(sizes.n_eff), key=lambda t: (-U[t], t))
    assignment = [0] * sizes.n_eff
    for pos, t in enumerate(order):
        assignment[t] = pos // sizes.subset_size + 1
    return PartitionMessage(tuple(assignment))


# -- vectorised paths used by the Monte Carlo harness ---------------------------------


def canonical_assignment(sizes: DerivedSizes) -> np.ndarray:
    return np.repeat(np.arange(1, sizes.num_subsets + 1), sizes.subset_size)


def canonical_pool(counts: SubsetCounts, sizes: DerivedSizes) -> np.ndarray:
    """Copy counts for the n_eff types laid out subset by subset (the index-0 message)."""
    tail = np.repeat(np.asarray(counts.N, dtype=np.int64), sizes.subset_size)
    return np.concatenate([np.asarray(counts.first_subset_counts, dtype=np.int64), tail])


def scatter_canonical(assignments: np.ndarray, canonical: np.ndarray) -> np.ndarray:
    """Map rows laid out in canonical order onto types according to each assignment.

    Position j of the canonical layout is the j-th type when types are sorted by
    (subset, type index), which is how `encode` hands out subset-1 shares.
    """
    order = np.argsort(assignments, axis=1, kind="stable")
    out = np.empty_like(canonical)
    np.put_along_axis(out, order, canonical, axis=1)
    return out


def decode_batch(U: np.ndarray, sizes: DerivedSizes, strict_zero_rule: bool = True):
    """Row-wise decode of read-count rows.

    Returns (assignments, zero_failure) where zero_failure flags rows the zero
    rule rejects; their assignment rows are still filled in but meaningless.
    """
    U = np.asarray(U)[:, : sizes.n_eff]
    zeros = np.count_nonzero(U == 0, axis=1)
    fail = zeros > 0 if strict_zero_rule else zeros > sizes.subset_size
    order = np.argsort(-U, axis=1, kind="stable")
    labels = np.broadcast_to(canonical_assignment(sizes), U.shape)
    dec = np.empty(U.shape, dtype=np.int64)
    np.put_along_axis(dec, order, labels, axis=1)
    return dec, fail


def message_to_json(msg: PartitionMessage, codeword: CountVector | None = None, index: int | None = None) -> str:
    doc: dict = {"assignment": list(msg.assignment)}
    if index is not None:
        doc["index"] = str(index)
    if codeword is not None:
        doc["counts"] = list(codeword.counts)
    return json.dumps(doc)


def message_from_json(text: str) -> tuple[PartitionMessage, CountVector | None]:
    doc = json.loads(text)
    msg = PartitionMessage.of(doc["assignment"])
    cw = CountVector.of(doc["counts"]) if "counts" in doc else None
    return msg, cw
