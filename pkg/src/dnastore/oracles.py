"""Exhaustive-enumeration oracles for small channels.

These sum over every possible read-count vector instead of sampling, and use the
scalar codec paths, so they share nothing with the vectorised Monte Carlo code
beyond the codeword construction.
"""

from __future__ import annotations

import itertools
import math
from typing import Iterator

import numpy as np

from .channel import ReadCounts
from .mathkit import kl_divergence
from .params import DerivedSizes
from .partition import DecodeFailure, codebook_size, decode, encode, subset_counts, unrank
from .random_coding import Codebook


def compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """All tuples of `parts` nonnegative integers summing to `total` (stars and bars)."""
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(total + parts - 1 - prev - 1)
        yield tuple(out)


def multinomial_pmf(counts: tuple[int, ...], probs) -> float:
    K = sum(counts)
    logp = math.lgamma(K + 1)
    for c, p in zip(counts, probs):
        if c == 0:
            continue
        if p == 0:
            return 0.0
        logp += c * math.log(p) - math.lgamma(c + 1)
    return math.exp(logp)


def exact_pc_error(M: int, sizes: DerivedSizes, K: int, strict_zero_rule: bool = True) -> float:
    """Error probability of the partition code averaged over all messages, by enumeration."""
    counts = subset_counts(M, sizes)
    total = codebook_size(sizes)
    outcomes = list(compositions(K, sizes.n_eff))
    err = 0.0
    for idx in range(total):
        msg = unrank(idx, sizes)
        pool = encode(msg, counts, sizes).counts[: sizes.n_eff]
        probs = [c / M for c in pool]
        for u in outcomes:
            pr = multinomial_pmf(u, probs)
            if pr == 0.0:
                continue
            try:
                ok = decode(ReadCounts(u), sizes, strict_zero_rule) == msg
            except DecodeFailure:
                ok = False
            if not ok:
                err += pr
    return err / total


def brute_force_ml_decode(u: tuple[int, ...], book: Codebook) -> int:
    q = np.asarray(u, dtype=float) / sum(u)
    best, arg = math.inf, 0
    for m in range(book.size):
        d = kl_divergence(q, book.pmfs()[m])
        if d < best:
            best, arg = d, m
    return arg


def exact_rc_error(book: Codebook, K: int) -> float:
    """Error probability of minimum-KL decoding for a fixed codebook, by enumeration."""
    pmfs = book.pmfs()
    outcomes = list(compositions(K, book.n))
    decoded = {u: brute_force_ml_decode(u, book) for u in outcomes}
    err = 0.0
    for m in range(book.size):
        for u in outcomes:
            if decoded[u] != m:
                err += multinomial_pmf(u, pmfs[m])
    return err / book.size


def brute_force_partitions(sizes: DerivedSizes) -> list[tuple[int, ...]]:
    """Every assignment vector with equal subset multiplicities, in lexicographic order."""
    base = [i + 1 for i in range(sizes.num_subsets) for _ in range(sizes.subset_size)]
    return sorted(set(itertools.permutations(base)))
