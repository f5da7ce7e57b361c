"""Random coding over the simplex with floor quantization and minimum-KL decoding."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .channel import NS_CODEBOOK, CountVector, ReadCounts, RngStream
from .params import ParameterError

CODEBOOK_SCHEMA_VERSION = 1
# Codewords drawn per RNG stream; fixed so a codebook never depends on threading.
CODEWORDS_PER_STREAM = 1024
# Codewords scored per block inside the decoder, bounding the (trials x block) matrix.
DECODE_BLOCK = 2048


class QuantizationError(ParameterError):
    """Every entry of M * P floored to zero."""


def exponential_simplex(gen: np.random.Generator, n: int, size: int | None = None) -> np.ndarray:
    """Uniform simplex draws: normalised i.i.d. Exp(1) variables (last axis sums to 1)."""
    shape = (n,) if size is None else (size, n)
    x = gen.standard_exponential(shape)
    # Exp(1) draws of exactly 0.0 would leave the point on the boundary.
    while np.any(x == 0.0):
        bad = x == 0.0
        x[bad] = gen.standard_exponential(int(bad.sum()))
    return x / x.sum(axis=-1, keepdims=True)


def draw_simplex(n: int, rng: RngStream) -> np.ndarray:
    if n < 2:
        raise ValueError("the simplex needs n >= 2")
    return exponential_simplex(rng.generator(), n)


@dataclass(frozen=True)
class QuantizedCodeword:
    counts: CountVector

    @property
    def pmf(self) -> np.ndarray:
        return self.counts.probs()


def quantize_counts(p: np.ndarray, M: int) -> np.ndarray:
    return np.floor(M * np.asarray(p, dtype=float)).astype(np.int64)


def quantize(p, M: int) -> QuantizedCodeword:
    """floor(M * P(l)) copies of each type."""
    if M < 1:
        raise ValueError("M must be positive")
    counts = quantize_counts(p, M)
    if counts.sum() == 0:
        raise QuantizationError(f"M={M} is too small: every type rounds to zero copies")
    return QuantizedCodeword(CountVector.of(counts))


@dataclass
class Codebook:
    counts: np.ndarray  # (size, n) int64
    M: int
    master_seed: int | None = None
    _logp: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def size(self) -> int:
        return self.counts.shape[0]

    @property
    def n(self) -> int:
        return self.counts.shape[1]

    def codeword(self, m: int) -> QuantizedCodeword:
        return QuantizedCodeword(CountVector.of(self.counts[m]))

    def pmfs(self) -> np.ndarray:
        return self.counts / self.counts.sum(axis=1, keepdims=True)

    def log_pmfs(self) -> np.ndarray:
        """ln P_m(i), with -inf where a codeword holds no copies of a type."""
        if self._logp is None:
            with np.errstate(divide="ignore"):
                self._logp = np.log(self.pmfs())
        return self._logp

    def to_json(self) -> str:
        return json.dumps({
            "schema_version": CODEBOOK_SCHEMA_VERSION,
            "M": self.M,
            "n": self.n,
            "master_seed": self.master_seed,
            "counts": self.counts.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "Codebook":
        doc = json.loads(text)
        if doc.get("schema_version") != CODEBOOK_SCHEMA_VERSION:
            raise ValueError(f"unsupported codebook schema {doc.get('schema_version')!r}")
        return cls(np.asarray(doc["counts"], dtype=np.int64), int(doc["M"]), doc.get("master_seed"))


def generate_codebook(size: int, n: int, M: int, rng: RngStream | int) -> Codebook:
    """`size` independent draw-then-quantize codewords over n types."""
    if size < 2:
        raise ParameterError("a codebook needs at least two codewords")
    if n < 2:
        raise ParameterError("need n >= 2 molecule types")
    if M < n:
        raise ParameterError(f"M={M} < n={n}: quantised codewords would be mostly empty")
    seed = rng.master_seed if isinstance(rng, RngStream) else int(rng)
    rows = []
    for block, start in enumerate(range(0, size, CODEWORDS_PER_STREAM)):
        gen = RngStream(seed, block, NS_CODEBOOK).generator()
        m = min(CODEWORDS_PER_STREAM, size - start)
        rows.append(quantize_counts(exponential_simplex(gen, n, m), M))
    counts = np.concatenate(rows)
    # M >= n guarantees some floor(M P_i) >= 1 since max P_i >= 1/n.
    return Codebook(counts, M, seed)


def kl_to_codebook(Q: np.ndarray, book: Codebook, lo: int = 0, hi: int | None = None) -> np.ndarray:
    """KL(Q_t || P_m) for frequency rows Q_t and codewords lo..hi-1; +inf on support violations."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    logp = book.log_pmfs()[lo:hi]
    finite = np.isfinite(logp)
    with np.errstate(divide="ignore", invalid="ignore"):
        qlogq = np.where(Q > 0, Q * np.log(np.where(Q > 0, Q, 1.0)), 0.0).sum(axis=1)
    cross = Q @ np.where(finite, logp, 0.0).T
    violates = (Q > 0).astype(float) @ (~finite).astype(float).T > 0
    kl = qlogq[:, None] - cross
    kl[violates] = np.inf
    return kl


def ml_decode_batch(U: np.ndarray, book: Codebook) -> tuple[np.ndarray, np.ndarray]:
    """Minimum-KL decode of read-count rows.

    Returns (indices, unsupported) where unsupported marks rows whose divergence
    is infinite for every codeword; those rows decode to index 0.
    """
    U = np.atleast_2d(np.asarray(U, dtype=float))
    if U.shape[1] != book.n:
        raise ValueError(f"reads cover {U.shape[1]} types, codebook has {book.n}")
    Q = U / U.sum(axis=1, keepdims=True)
    best = np.full(Q.shape[0], np.inf)
    arg = np.zeros(Q.shape[0], dtype=np.int64)
    for lo in range(0, book.size, DECODE_BLOCK):
        kl = kl_to_codebook(Q, book, lo, lo + DECODE_BLOCK)
        j = np.argmin(kl, axis=1)
        v = kl[np.arange(kl.shape[0]), j]
        better = v < best  # strict: earlier codewords win ties
        best[better] = v[better]
        arg[better] = lo + j[better]
    return arg, ~np.isfinite(best)


def ml_decode(reads: ReadCounts, book: Codebook) -> int:
    """argmin_m KL(Q_y || P_m), lowest index on ties."""
    idx, _ = ml_decode_batch(np.asarray(reads.counts)[None, :], book)
    return int(idx[0])
