"""Noiseless shuffling-sampling channel: K uniform draws with replacement from a molecular pool.

Reads are kept as per-type counts; the decoders never need the strings themselves.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Separate key spaces so codebook draws never share a stream with channel trials.
NS_TRIALS = 0
NS_CODEBOOK = 1
NS_MISC = 2


@dataclass(frozen=True)
class RngStream:
    """Counter-derived random stream keyed by (master_seed, namespace, stream_index)."""

    master_seed: int
    stream_index: int = 0
    namespace: int = NS_MISC

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(
            entropy=self.master_seed & 0xFFFFFFFFFFFFFFFF,
            spawn_key=(self.namespace, self.stream_index),
        )
        return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class CountVector:
    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(c < 0 for c in self.counts):
            raise ValueError("counts must be nonnegative")

    @classmethod
    def of(cls, counts: Sequence[int]) -> "CountVector":
        return cls(tuple(int(c) for c in counts))

    @property
    def total(self) -> int:
        return sum(self.counts)

    def probs(self) -> np.ndarray:
        c = np.asarray(self.counts, dtype=float)
        return c / c.sum()

    def __len__(self) -> int:
        return len(self.counts)


@dataclass(frozen=True)
class ReadCounts:
    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(c < 0 for c in self.counts):
            raise ValueError("read counts must be nonnegative")
        if self.K < 1:
            raise ValueError("at least one read is required")

    @classmethod
    def of(cls, counts: Sequence[int]) -> "ReadCounts":
        return cls(tuple(int(c) for c in counts))

    @property
    def K(self) -> int:
        return sum(self.counts)

    def __len__(self) -> int:
        return len(self.counts)


def pool_probs(pool: CountVector | Sequence[int] | np.ndarray) -> np.ndarray:
    counts = np.asarray(pool.counts if isinstance(pool, CountVector) else pool, dtype=float)
    total = counts.sum()
    if total < 1:
        raise ValueError("cannot sample from an empty pool")
    return counts / total


def sample_read_matrix(probs: np.ndarray, K: int, size: int, gen: np.random.Generator) -> np.ndarray:
    """`size` independent Multinomial(K, probs) count vectors as rows.

    numpy draws these by sequential conditional binomials, so the cost is O(n) per row.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    return gen.multinomial(K, probs, size=size)


def sample_reads(pool: CountVector, K: int, rng: RngStream) -> ReadCounts:
    p = pool_probs(pool)
    row = sample_read_matrix(p, K, 1, rng.generator())[0]
    return ReadCounts.of(row)


def to_frequency(reads: ReadCounts) -> np.ndarray:
    return np.asarray(reads.counts, dtype=float) / reads.K


def index_to_string(index: int, L: int, alphabet_size: int, symbols: str | None = None) -> str:
    """Base-|A| expansion of a molecule type index, most significant symbol first."""
    if symbols is None:
        symbols = "ACGT" if alphabet_size == 4 else "0123456789abcdefghijklmnopqrstuvwxyz"[:alphabet_size]
    if len(symbols) < alphabet_size:
        raise ValueError("not enough symbols for this alphabet")
    if not 0 <= index < alphabet_size**L:
        raise ValueError(f"type index {index} does not fit in {L} symbols")
    out = []
    for _ in range(L):
        index, r = divmod(index, alphabet_size)
        out.append(symbols[r])
    return "".join(reversed(out))


def string_to_index(s: str, alphabet_size: int, symbols: str | None = None) -> int:
    if symbols is None:
        symbols = "ACGT" if alphabet_size == 4 else "0123456789abcdefghijklmnopqrstuvwxyz"[:alphabet_size]
    value = 0
    for ch in s:
        value = value * alphabet_size + symbols.index(ch)
    return value
