"""Monte Carlo estimation of decoding error probabilities, with sweep persistence.

Trials are grouped into fixed-size chunks and chunk c draws from the stream
(master_seed, c). Chunk boundaries never depend on the thread count, and chunk
tallies are summed as integers, so every result field except the wall time is a
function of the ExperimentSpec alone.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import bounds
from .channel import NS_TRIALS, RngStream
from .params import DerivedSizes, ParameterError, SystemParams, derive
from .partition import (
    canonical_assignment,
    canonical_pool,
    codebook_size as pc_codebook_size,
    decode_batch,
    scatter_canonical,
    subset_counts,
)
from .random_coding import Codebook, generate_codebook, ml_decode_batch

log = logging.getLogger(__name__)

TRIALS_PER_STREAM = 4096
SCHEMA_VERSION = 1
WILSON_Z = 1.959963984540054

CSV_COLUMNS = [
    "scheme", "M", "alphabet", "beta", "xi", "rho", "n", "n_eff", "K", "codebook_size",
    "trials", "errors", "error_rate", "ci_low", "ci_high", "bound_term1", "bound_term2",
    "bound_total", "zero_count_errors", "order_errors", "master_seed", "wall_time_ms",
]

SCHEMES = ("partition", "random_coding")


@dataclass(frozen=True)
class ExperimentSpec:
    params: SystemParams
    scheme: str = "partition"
    trials: int = 10_000
    master_seed: int = 0
    codebook_size: int | None = None
    strict_zero_rule: bool = True
    parallelism: int = 1

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ParameterError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.trials < 1:
            raise ParameterError("trials must be at least 1")
        if self.parallelism < 1:
            raise ParameterError("parallelism must be at least 1")
        if self.scheme == "random_coding" and (self.codebook_size is None or self.codebook_size < 2):
            raise ParameterError("random coding needs codebook_size >= 2")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        params = SystemParams(
            M=int(d["M"]),
            alphabet_size=int(d.get("alphabet", d.get("alphabet_size", 2))),
            beta=float(d["beta"]),
            xi=float(d.get("xi", 1.0)),
            rho=float(d.get("rho", 0.5)),
        )
        cb = d.get("codebook_size")
        return cls(
            params=params,
            scheme=d.get("scheme", "partition"),
            trials=int(d.get("trials", 10_000)),
            master_seed=int(d.get("master_seed", d.get("seed", 0))),
            codebook_size=int(cb) if cb is not None else None,
            strict_zero_rule=bool(d.get("strict_zero_rule", d.get("strict", True))),
            parallelism=int(d.get("parallelism", 1)),
        )


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    sizes: DerivedSizes
    codebook_size: int
    errors: int
    zero_count_errors: int
    order_errors: int
    ci_low: float
    ci_high: float
    bound_term1: float
    bound_term2: float
    bound_total: float
    bound_breakdown: dict = field(default_factory=dict)
    unsupported_reads: int = 0
    wall_time_ms: float = 0.0

    @property
    def error_rate(self) -> float:
        return self.errors / self.spec.trials

    def to_row(self) -> dict:
        p = self.spec.params
        return {
            "scheme": self.spec.scheme, "M": p.M, "alphabet": p.alphabet_size,
            "beta": p.beta, "xi": p.xi, "rho": p.rho,
            "n": self.sizes.n, "n_eff": self.sizes.n_eff, "K": self.sizes.K,
            "codebook_size": self.codebook_size, "trials": self.spec.trials,
            "errors": self.errors, "error_rate": self.error_rate,
            "ci_low": self.ci_low, "ci_high": self.ci_high,
            "bound_term1": self.bound_term1, "bound_term2": self.bound_term2,
            "bound_total": self.bound_total,
            "zero_count_errors": self.zero_count_errors, "order_errors": self.order_errors,
            "master_seed": self.spec.master_seed, "wall_time_ms": round(self.wall_time_ms, 3),
        }

    def to_dict(self) -> dict:
        d = self.to_row()
        d["codebook_size"] = str(self.codebook_size)
        d["strict_zero_rule"] = self.spec.strict_zero_rule
        d["parallelism"] = self.spec.parallelism
        d["sizes"] = self.sizes.to_dict()
        d["bound_breakdown"] = self.bound_breakdown
        d["unsupported_reads"] = self.unsupported_reads
        return d


def wilson_interval(successes: int, trials: int, z: float = WILSON_Z) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be positive")
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    centre = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / denom
    return max(0.0, min(p, centre - half)), min(1.0, max(p, centre + half))


def _chunks(trials: int) -> list[tuple[int, int]]:
    return [(c, min(TRIALS_PER_STREAM, trials - start))
            for c, start in enumerate(range(0, trials, TRIALS_PER_STREAM))]


def _map_chunks(fn, trials: int, parallelism: int) -> np.ndarray:
    chunks = _chunks(trials)
    if parallelism == 1 or len(chunks) == 1:
        parts = [fn(c, t) for c, t in chunks]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            parts = list(pool.map(lambda ct: fn(*ct), chunks))
    return np.sum(np.asarray(parts, dtype=np.int64), axis=0)


def pc_trial_chunk(spec: ExperimentSpec, sizes: DerivedSizes, probs: np.ndarray,
                   chunk: int, trials: int) -> tuple[int, int]:
    """Zero-count and mis-ordering tallies for one chunk of partition-code trials."""
    gen = RngStream(spec.master_seed, chunk, NS_TRIALS).generator()
    base = canonical_assignment(sizes)
    truth = gen.permuted(np.tile(base, (trials, 1)), axis=1)
    reads = scatter_canonical(truth, gen.multinomial(sizes.K, probs, size=trials))
    decoded, zero_fail = decode_batch(reads, sizes, spec.strict_zero_rule)
    wrong = np.any(decoded != truth, axis=1)
    return int(zero_fail.sum()), int((wrong & ~zero_fail).sum())


def run_pc_experiment(spec: ExperimentSpec) -> ExperimentResult:
    t0 = time.perf_counter()
    p = spec.params
    sizes = derive(p)
    counts = subset_counts(p.M, sizes)
    probs = canonical_pool(counts, sizes) / p.M
    zero, order = _map_chunks(
        lambda c, t: pc_trial_chunk(spec, sizes, probs, c, t), spec.trials, spec.parallelism
    )
    errors = int(zero + order)
    lo, hi = wilson_interval(errors, spec.trials)
    bb = bounds.pc_error_bound(p, sizes)
    return ExperimentResult(
        spec=spec, sizes=sizes, codebook_size=pc_codebook_size(sizes),
        errors=errors, zero_count_errors=int(zero), order_errors=int(order),
        ci_low=lo, ci_high=hi,
        bound_term1=bb.term1, bound_term2=bb.term2, bound_total=bb.total,
        bound_breakdown=bb.to_dict(),
        wall_time_ms=1e3 * (time.perf_counter() - t0),
    )


def rc_trial_chunk(spec: ExperimentSpec, book: Codebook, K: int,
                   chunk: int, trials: int) -> tuple[int, int]:
    gen = RngStream(spec.master_seed, chunk, NS_TRIALS).generator()
    sent = gen.integers(0, book.size, size=trials)
    reads = np.zeros((trials, book.n), dtype=np.int64)
    pmfs = book.pmfs()
    for m in np.unique(sent):
        rows = np.flatnonzero(sent == m)
        reads[rows] = gen.multinomial(K, pmfs[m], size=rows.size)
    decoded, unsupported = ml_decode_batch(reads, book)
    return int(np.count_nonzero(decoded != sent)), int(unsupported.sum())


def _rc_bound(p: SystemParams, sizes: DerivedSizes, size: int) -> tuple[float, float, float, dict]:
    try:
        delta = bounds.rc_implied_delta(size, sizes.n, p.M)
        if delta <= 0:
            return math.nan, math.nan, 1.0, {"delta": delta, "note": "codebook too large for the bound"}
        rb = bounds.rc_bound_terms(p, sizes, delta)
    except (ParameterError, ValueError) as exc:
        return math.nan, math.nan, 1.0, {"note": str(exc)}
    return rb.term1, rb.term2, rb.total, {**asdict(rb.constants), "term1_log": rb.term1_log,
                                          "term2": rb.term2, "total": rb.total}


def run_rc_experiment(spec: ExperimentSpec, book: Codebook | None = None) -> ExperimentResult:
    """Random-coding experiment; one seeded codebook, then i.i.d. trials against it."""
    if spec.scheme != "random_coding":
        spec = replace(spec, scheme="random_coding")
    t0 = time.perf_counter()
    p = spec.params
    sizes = derive(p)
    if book is None:
        book = generate_codebook(spec.codebook_size, sizes.n, p.M, RngStream(spec.master_seed))
    elif book.size != spec.codebook_size:
        raise ParameterError("supplied codebook does not match codebook_size")
    elif book.n != sizes.n:
        raise ParameterError(f"supplied codebook has {book.n} types, parameters give n = {sizes.n}")
    errors, unsupported = _map_chunks(
        lambda c, t: rc_trial_chunk(spec, book, sizes.K, c, t), spec.trials, spec.parallelism
    )
    lo, hi = wilson_interval(int(errors), spec.trials)
    t1, t2, total, breakdown = _rc_bound(p, sizes, book.size)
    return ExperimentResult(
        spec=spec, sizes=sizes, codebook_size=book.size,
        errors=int(errors), zero_count_errors=0, order_errors=0,
        ci_low=lo, ci_high=hi,
        bound_term1=t1, bound_term2=t2, bound_total=total, bound_breakdown=breakdown,
        unsupported_reads=int(unsupported),
        wall_time_ms=1e3 * (time.perf_counter() - t0),
    )


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    return run_pc_experiment(spec) if spec.scheme == "partition" else run_rc_experiment(spec)


# -- sweeps ---------------------------------------------------------------------------

_KEY_FIELDS = ("scheme", "M", "alphabet", "beta", "xi", "rho", "trials", "master_seed")


def _key_from_values(values: dict) -> str:
    parts = [str(values[k]) for k in _KEY_FIELDS]
    if values["scheme"] == "random_coding":
        parts.append(str(values["codebook_size"]))
    return hashlib.sha256("|".join(parts).encode()).hexdigest()[:16]


def spec_key(spec: ExperimentSpec) -> str:
    p = spec.params
    return _key_from_values({
        "scheme": spec.scheme, "M": p.M, "alphabet": p.alphabet_size, "beta": p.beta,
        "xi": p.xi, "rho": p.rho, "trials": spec.trials, "master_seed": spec.master_seed,
        "codebook_size": spec.codebook_size,
    })


def read_rows(path: Path) -> list[dict]:
    if not path.exists() or path.stat().st_size == 0:
        return []
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))


@dataclass
class SweepSummary:
    csv_path: Path
    json_path: Path
    computed: int = 0
    skipped: int = 0
    failures: list[dict] = field(default_factory=list)


def sweep(grid: Sequence[ExperimentSpec], output_path: str | Path,
          parallel_experiments: int = 1) -> SweepSummary:
    """Run every spec not already present in the CSV; append rows in grid order."""
    if not grid:
        raise ParameterError("empty sweep grid")
    out = Path(output_path)
    summary = SweepSummary(out, out.with_suffix(".json"))
    done = {_key_from_values(r) for r in read_rows(out)}
    todo = []
    for i, spec in enumerate(grid):
        if spec_key(spec) in done:
            summary.skipped += 1
        else:
            todo.append((i, spec))

    def attempt(spec: ExperimentSpec):
        try:
            return run_experiment(spec)
        except (ParameterError, ValueError) as exc:
            return exc

    if parallel_experiments > 1:
        with ThreadPoolExecutor(max_workers=parallel_experiments) as pool:
            results: Iterable = pool.map(attempt, [s for _, s in todo])
            results = list(results)
    else:
        results = (attempt(s) for _, s in todo)

    for (i, _), res in zip(todo, results):
        if isinstance(res, Exception):
            log.warning("grid row %d failed: %s", i, res)
            summary.failures.append({"row": i, "error": str(res)})
            continue
        try:
            _append_row(out, res.to_row())
            summary.computed += 1
        except OSError as exc:
            log.error("could not write row %d: %s", i, exc)
            summary.failures.append({"row": i, "error": f"I/O: {exc}"})

    try:
        rows = read_rows(out)
        summary.json_path.write_text(json.dumps({
            "schema_version": SCHEMA_VERSION,
            "columns": CSV_COLUMNS,
            "rows": rows,
            "computed": summary.computed,
            "skipped": summary.skipped,
            "failures": summary.failures,
        }, indent=2))
    except OSError as exc:
        summary.failures.append({"row": None, "error": f"I/O: {exc}"})
    return summary


def _append_row(path: Path, row: dict) -> None:
    new = not path.exists() or path.stat().st_size == 0
    with path.open("a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        if new:
            w.writeheader()
        w.writerow(row)
        fh.flush()


def write_rows(results: Iterable[ExperimentResult], fh) -> None:
    w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in results:
        w.writerow(r.to_row())
