import csv
import json
import math

import numpy as np
import pytest

from dnastore import harness
from dnastore.channel import RngStream
from dnastore.harness import (
    CSV_COLUMNS,
    ExperimentSpec,
    read_rows,
    run_experiment,
    run_pc_experiment,
    run_rc_experiment,
    sweep,
    wilson_interval,
)
from dnastore.params import ParameterError, SystemParams, beta_for_types
from dnastore.random_coding import generate_codebook

LN2 = math.log(2)
SMALL = SystemParams(12, 2, beta_for_types(12, 2, 4), 8 / 12, 0.5)


def strip_time(rows):
    return [{k: v for k, v in r.items() if k != "wall_time_ms"} for r in rows]


class TestWilson:
    def test_contains_estimate(self):
        for k, n in [(0, 10), (3, 10), (10, 10), (1, 10**6), (500, 1000)]:
            lo, hi = wilson_interval(k, n)
            assert 0 <= lo <= k / n <= hi <= 1

    def test_known_value(self):
        lo, hi = wilson_interval(5, 100)
        assert lo == pytest.approx(0.021543, abs=1e-6) and hi == pytest.approx(0.111750, abs=1e-6)

    def test_coverage(self):
        gen = RngStream(1).generator()
        p, n = 0.03, 400
        ks = gen.binomial(n, p, size=20_000)
        cover = np.mean([lo <= p <= hi for lo, hi in (wilson_interval(int(k), n) for k in ks)])
        assert 0.93 <= cover <= 0.97


class TestPartitionExperiment:
    def test_error_split(self):
        r = run_pc_experiment(ExperimentSpec(SMALL, trials=20_000, master_seed=3))
        assert r.errors == r.zero_count_errors + r.order_errors
        assert r.codebook_size == 6 and r.sizes.n_eff == 4

    def test_relaxed_rule_no_worse(self):
        strict = run_pc_experiment(ExperimentSpec(SMALL, trials=20_000, master_seed=3))
        relaxed = run_pc_experiment(ExperimentSpec(SMALL, trials=20_000, master_seed=3, strict_zero_rule=False))
        assert relaxed.errors <= strict.errors

    def test_huge_xi_is_error_free(self):
        p = SystemParams(2**12, 2, 0.25 / LN2, 50.0, 1.0)
        r = run_pc_experiment(ExperimentSpec(p, trials=5_000, master_seed=0))
        assert r.errors == 0 and r.ci_low == 0.0

    def test_bound_attached(self):
        p = SystemParams(2**16, 2, 0.3466 / LN2, 1.0, 0.5)
        r = run_pc_experiment(ExperimentSpec(p, trials=2_000))
        assert r.bound_total == pytest.approx(1.068038437350131e-4, rel=1e-9)
        assert r.bound_total == pytest.approx(r.bound_term1 + r.bound_term2, rel=1e-12)

    @pytest.mark.parametrize("scheme", ["partition", "random_coding"])
    def test_parallelism_invariance(self, scheme):
        p = SystemParams(1024, 2, 0.3 / LN2, 0.5, 1.0)
        kw = dict(scheme=scheme, trials=3 * harness.TRIALS_PER_STREAM + 17, master_seed=9,
                  codebook_size=64 if scheme == "random_coding" else None)
        a = run_experiment(ExperimentSpec(p, parallelism=1, **kw)).to_row()
        b = run_experiment(ExperimentSpec(p, parallelism=8, **kw)).to_row()
        a.pop("wall_time_ms"), b.pop("wall_time_ms")
        assert a == b

    def test_seed_changes_outcome(self):
        p = SystemParams(1024, 2, 0.3 / LN2, 0.5, 1.0)
        a = run_pc_experiment(ExperimentSpec(p, trials=20_000, master_seed=1))
        b = run_pc_experiment(ExperimentSpec(p, trials=20_000, master_seed=2))
        assert a.errors != b.errors


class TestRandomCodingExperiment:
    def test_more_reads_do_not_hurt(self):
        M = 4096
        base = SystemParams(M, 2, beta_for_types(M, 2, 6), 0.01, 0.5)
        more = SystemParams(M, 2, base.beta, 0.16, 0.5)
        for seed in range(5):
            book = generate_codebook(32, 6, M, RngStream(seed, namespace=1))
            e1 = run_rc_experiment(ExperimentSpec(base, "random_coding", 20_000, seed, 32), book).error_rate
            e2 = run_rc_experiment(ExperimentSpec(more, "random_coding", 20_000, seed, 32), book).error_rate
            assert e2 <= e1 + 3 * math.sqrt(e1 * (1 - e1) / 20_000) + 1e-12

    def test_vacuous_bound_reported(self):
        p = SystemParams(1024, 2, 0.3 / LN2, 0.5, 1.0)
        r = run_experiment(ExperimentSpec(p, "random_coding", 1000, 0, 16))
        assert r.bound_total == 1.0 and r.codebook_size == 16

    def test_spec_validation(self):
        with pytest.raises(ParameterError):
            ExperimentSpec(SMALL, "random_coding", 10)
        with pytest.raises(ParameterError):
            ExperimentSpec(SMALL, "nope")
        with pytest.raises(ParameterError):
            ExperimentSpec(SMALL, trials=0)


class TestSweep:
    def grid(self, seeds=(0, 1, 2)):
        return [ExperimentSpec(SMALL, trials=2000, master_seed=s) for s in seeds] + [
            ExperimentSpec(SMALL, "random_coding", 2000, 5, 4)]

    def test_fresh_run(self, tmp_path):
        out = tmp_path / "s.csv"
        summary = sweep(self.grid(), out)
        assert summary.computed == 4 and summary.skipped == 0 and not summary.failures
        with out.open() as fh:
            assert next(csv.reader(fh)) == CSV_COLUMNS
        meta = json.loads(out.with_suffix(".json").read_text())
        assert meta["schema_version"] == harness.SCHEMA_VERSION and len(meta["rows"]) == 4

    def test_rerun_is_noop(self, tmp_path):
        out = tmp_path / "s.csv"
        sweep(self.grid(), out)
        before = out.read_bytes()
        summary = sweep(self.grid(), out)
        assert summary.computed == 0 and summary.skipped == 4 and out.read_bytes() == before

    def test_resume_matches_uninterrupted(self, tmp_path):
        full, part = tmp_path / "full.csv", tmp_path / "part.csv"
        sweep(self.grid(), full)
        sweep(self.grid()[:2], part)
        summary = sweep(self.grid(), part)
        assert summary.computed == 2 and summary.skipped == 2
        assert strip_time(read_rows(full)) == strip_time(read_rows(part))

    def test_parallel_experiments_keep_order(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        sweep(self.grid(), a)
        sweep(self.grid(), b, parallel_experiments=4)
        assert strip_time(read_rows(a)) == strip_time(read_rows(b))

    def test_bad_row_reported_not_fatal(self, tmp_path):
        bad = ExperimentSpec(SystemParams(4, 2, beta_for_types(4, 2, 10), 1.0, 0.5), trials=10)
        summary = sweep([bad, *self.grid((0,))], tmp_path / "s.csv")
        assert summary.computed == 2 and len(summary.failures) == 1 and summary.failures[0]["row"] == 0

    def test_empty_grid(self, tmp_path):
        with pytest.raises(ParameterError):
            sweep([], tmp_path / "s.csv")

    def test_from_dict(self):
        s = ExperimentSpec.from_dict({"M": 12, "beta": SMALL.beta, "xi": 8 / 12, "seed": 4, "trials": 7})
        assert s.params == SMALL and s.master_seed == 4 and s.trials == 7 and s.scheme == "partition"
