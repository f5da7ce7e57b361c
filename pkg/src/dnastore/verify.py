"""Self-check suites run by `dnastore verify`."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import bounds, mathkit, oracles
from .channel import RngStream
from .harness import ExperimentSpec, run_pc_experiment, run_rc_experiment
from .params import SystemParams, beta_for_types, derive, sizes_for_partition
from .partition import codebook_size, rank, unrank, weight_ladder
from .random_coding import generate_codebook


@dataclass
class Check:
    suite: str
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.suite}/{self.name}: {self.detail}"


def _random_pmf_pairs(gen: np.random.Generator, count: int):
    for _ in range(count):
        n = int(gen.integers(2, 12))
        yield gen.dirichlet(np.ones(n)), gen.dirichlet(np.ones(n))


def suite_mathkit(seed: int = 0) -> list[Check]:
    gen = RngStream(seed).generator()
    bad = 0
    for q, p in _random_pmf_pairs(gen, 10_000):
        kl, chi2 = mathkit.kl_divergence(q, p), mathkit.chi2_divergence(q, p)
        if not (-1e-15 <= kl <= math.log1p(chi2) + 1e-12 and math.log1p(chi2) <= chi2 + 1e-12):
            bad += 1
    out = [Check("mathkit", "kl_chi2_chain", bad == 0, f"{bad} violations / 10000")]

    grid = np.logspace(-3, 6, 400)
    g_bad = sum(not mathkit.gordon_check(float(t)) for t in grid)
    m_bad = sum(not mathkit.mortici_check(float(x)) for x in [0.0, *np.logspace(0, 6, 400)])
    out.append(Check("mathkit", "gordon_sandwich", g_bad == 0, f"{g_bad} violations / {grid.size}"))
    out.append(Check("mathkit", "mortici_bound", m_bad == 0, f"{m_bad} violations / 401"))

    a = gen.uniform(0, 10, 10_000)
    b = gen.uniform(0, 10, 10_000)
    a[a == 0] = 1e-300
    b[b == 0] = 1e-300
    am_bad = sum(mathkit.am_gm_gap(x, y) + 1e-12 * max(x, y) < mathkit.am_gm_gap_lower_bound(x, y)
                 for x, y in zip(a, b))
    out.append(Check("mathkit", "am_gm_refinement", am_bad == 0, f"{am_bad} violations / 10000"))

    ts = np.logspace(-3, 8, 200)
    rec = np.abs(mathkit.log_gamma(ts + 1) - mathkit.log_gamma(ts) - np.log(ts))
    scale = np.maximum(1.0, np.abs(mathkit.log_gamma(ts + 1)))
    worst = float(np.max(rec / scale))
    out.append(Check("mathkit", "log_gamma_recurrence", worst <= 1e-10, f"max rel err {worst:.2e}"))
    return out


def suite_codec() -> list[Check]:
    out = []
    ladders_ok = all(sum(weight_ladder(s).weights) == Fraction(1) for s in range(1, 201))
    out.append(Check("codec", "ladder_sums", ladders_ok, "s = 1..200"))
    for n_eff, s in [(2, 2), (4, 2), (6, 3), (8, 2), (8, 4)]:
        sizes = sizes_for_partition(n_eff, s)
        brute = oracles.brute_force_partitions(sizes)
        total = codebook_size(sizes)
        ok = total == len(brute) and all(
            unrank(i, sizes).assignment == a and rank(unrank(i, sizes), sizes) == i
            for i, a in enumerate(brute)
        )
        out.append(Check("codec", f"bijection_neff{n_eff}_s{s}", ok, f"{total} messages"))
    return out


def suite_oracle(seed: int = 0) -> list[Check]:
    out = []
    p = SystemParams(12, 2, beta_for_types(12, 2, 4), 8 / 12, 0.5)
    exact = oracles.exact_pc_error(12, derive(p), 8)
    trials = 200_000
    r = run_pc_experiment(ExperimentSpec(p, trials=trials, master_seed=seed))
    se = math.sqrt(exact * (1 - exact) / trials)
    z = abs(r.error_rate - exact) / se
    out.append(Check("oracle", "pc_exact_vs_mc", z <= 4, f"exact {exact:.6f} mc {r.error_rate:.6f} z={z:.2f}"))

    p = SystemParams(12, 2, beta_for_types(12, 2, 3), 0.5, 0.5)
    sizes = derive(p)
    book = generate_codebook(2, sizes.n, p.M, RngStream(seed))
    exact = oracles.exact_rc_error(book, sizes.K)
    r = run_rc_experiment(ExperimentSpec(p, "random_coding", trials, seed, codebook_size=2), book)
    se = math.sqrt(max(exact * (1 - exact), 1e-12) / trials)
    z = abs(r.error_rate - exact) / se
    out.append(Check("oracle", "rc_exact_vs_mc", z <= 4, f"exact {exact:.6f} mc {r.error_rate:.6f} z={z:.2f}"))
    return out


KNOWN_CROSSINGS = [(1.0, 1 / 3, 1 / 3), (0.5, 0.5, 0.25), (0.2, 5 / 7, 1 / 7)]


def suite_density() -> list[Check]:
    out = []
    for rho, beta, value in KNOWN_CROSSINGS:
        b = bounds.crossing_beta(rho, 2, base=2)
        rc = bounds.rc_density_target(b, 2, base=2)
        pc = bounds.pc_density_target(b, rho, 2, base=2)
        ok = abs(b - beta) < 1e-12 and abs(rc - value) < 1e-6 and abs(pc - value) < 1e-6
        out.append(Check("density", f"crossing_rho{rho}", ok, f"beta={b:.6f} rc={rc:.6f} pc={pc:.6f}"))
    return out


SUITES: dict[str, Callable[[], list[Check]]] = {
    "mathkit": suite_mathkit,
    "codec": suite_codec,
    "oracle": suite_oracle,
    "density": suite_density,
}


def run_suites(names: list[str]) -> list[Check]:
    if names == ["all"]:
        names = list(SUITES)
    checks: list[Check] = []
    for name in names:
        if name not in SUITES:
            raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)} or 'all'")
        checks.extend(SUITES[name]())
    return checks
