"""Command-line front end.

Exit codes: 0 success, 1 parameter/validation error, 2 I/O error, 3 verify failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from pathlib import Path

from . import bounds
from .harness import ExperimentSpec, run_pc_experiment, run_rc_experiment, sweep, write_rows
from .params import ParameterError, SystemParams, derive, sizes_for_partition
from .partition import (
    DecodeFailure,
    PartitionMessage,
    codebook_size,
    decode,
    encode,
    message_from_json,
    rank,
    subset_counts,
    unrank,
)
from .channel import ReadCounts, RngStream
from .random_coding import Codebook, generate_codebook
from .verify import run_suites

THREADS_ENV = "DNASTORE_THREADS"
EXIT_OK, EXIT_PARAM, EXIT_IO, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARAM, f"{self.prog}: error: {message}\n")


def load_config(path: str) -> dict:
    """JSON object, or `key = value` lines with # comments."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return json.loads(text)
    out = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"bad config line: {raw!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _add_param_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("system parameters")
    g.add_argument("--M", type=int, help="molecules per codeword")
    g.add_argument("--alphabet", type=int, help="alphabet size |A| (default 2)")
    g.add_argument("--beta", type=float, help="molecule-length parameter, L = beta ln M")
    g.add_argument("--xi", type=float, help="coverage depth K/M (default 1)")
    g.add_argument("--rho", type=float, help="partition parameter in [0, 1] (default 0.5)")
    g.add_argument("--config", help="JSON or key=value file supplying defaults")


def _merged(args, name: str, default=None):
    v = getattr(args, name, None)
    if v is None:
        v = args._config.get(name, default)
    return v


def _params(args) -> SystemParams:
    M = _merged(args, "M")
    beta = _merged(args, "beta")
    if M is None or beta is None:
        raise UsageError("--M and --beta are required (flag or config file)")
    return SystemParams(
        M=int(M),
        alphabet_size=int(_merged(args, "alphabet", 2)),
        beta=float(beta),
        xi=float(_merged(args, "xi", 1.0)),
        rho=float(_merged(args, "rho", 0.5)),
    )


def _experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--trials", type=int, default=None, help="Monte Carlo trials (default 10000)")
    p.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    p.add_argument("--parallelism", type=int, default=None,
                   help=f"worker threads (default ${THREADS_ENV} or 1)")
    p.add_argument("--relaxed", action="store_true",
                   help="fail only when more than subset_size counts are zero")
    p.add_argument("--format", choices=["csv", "json", "pretty"], default="csv")


def _spec(args, scheme: str) -> ExperimentSpec:
    cb = _merged(args, "codebook_size")
    return ExperimentSpec(
        params=_params(args),
        scheme=scheme,
        trials=int(_merged(args, "trials", 10_000)),
        master_seed=int(_merged(args, "seed", 0)),
        codebook_size=int(cb) if cb is not None else None,
        strict_zero_rule=not args.relaxed,
        parallelism=int(_merged(args, "parallelism", _default_threads())),
    )


def _emit_result(result, fmt: str, out) -> None:
    if fmt == "csv":
        write_rows([result], out)
    elif fmt == "json":
        out.write(json.dumps(result.to_dict(), indent=2, default=str) + "\n")
    else:
        for k, v in result.to_row().items():
            out.write(f"{k:>18}: {v}\n")


def cmd_pc_run(args, out) -> int:
    _emit_result(run_pc_experiment(_spec(args, "partition")), args.format, out)
    return EXIT_OK


def cmd_rc_run(args, out) -> int:
    book = None
    if args.load_codebook:
        book = Codebook.from_json(Path(args.load_codebook).read_text())
        if _merged(args, "codebook_size") is None:
            args.codebook_size = book.size
    spec = _spec(args, "random_coding")
    result = run_rc_experiment(spec, book)
    if args.save_codebook:
        book = book or generate_codebook(spec.codebook_size, result.sizes.n, spec.params.M,
                                         RngStream(spec.master_seed))
        Path(args.save_codebook).write_text(book.to_json())
    _emit_result(result, args.format, out)
    return EXIT_OK


def _load_grid(path: str) -> list[ExperimentSpec]:
    doc = json.loads(Path(path).read_text())
    defaults = {}
    if isinstance(doc, dict):
        defaults = doc.get("defaults", {})
        doc = doc["grid"]
    return [ExperimentSpec.from_dict({**defaults, **row}) for row in doc]


def cmd_sweep(args, out) -> int:
    grid = _load_grid(args.grid)
    summary = sweep(grid, args.out, parallel_experiments=args.parallel_experiments)
    out.write(json.dumps({
        "csv": str(summary.csv_path), "summary": str(summary.json_path),
        "computed": summary.computed, "skipped": summary.skipped, "failures": summary.failures,
    }, indent=2) + "\n")
    if any(f["error"].startswith("I/O") for f in summary.failures):
        return EXIT_IO
    return EXIT_OK


def cmd_bounds(args, out) -> int:
    p = _params(args)
    sizes = derive(p)
    doc: dict = {"params": p.to_dict(), "sizes": sizes.to_dict()}
    bb = bounds.pc_error_bound(p, sizes)
    doc["partition"] = bb.to_dict()
    try:
        doc["partition"]["simplified"] = bounds.pc_error_bound_simplified(p, sizes)
    except ParameterError as exc:
        doc["partition"]["simplified"] = None
        doc["partition"]["simplified_note"] = str(exc)
    if args.delta is not None:
        rb = bounds.rc_bound_terms(p, sizes, args.delta)
        doc["random_coding"] = {
            "c0": rb.constants.c0, "c1": rb.constants.c1, "c2": rb.constants.c2,
            "delta": rb.constants.delta, "term1_log": rb.term1_log, "term2": rb.term2,
            "total": rb.total,
        }
    out.write(json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


def _parse_base(s: str) -> float:
    if s in ("e", "nat", "nats"):
        return math.e
    b = float(s)
    if b <= 1:
        raise ParameterError("log base must exceed 1")
    return b


def density_table(alphabet: int, base: float, rhos: list[float], step: float) -> list[dict]:
    """Leading factors of both schemes over a beta grid that includes every crossing point."""
    top = math.log(base) / math.log(alphabet)  # beta at which beta log|A| = 1
    count = int(round(top / step))
    betas = {round(i * step, 12) for i in range(count + 1) if i * step <= top + 1e-12}
    betas.update(bounds.crossing_beta(r, alphabet, base) for r in rhos)
    rows = []
    for b in sorted(betas):
        row = {"beta": b, "rc": bounds.rc_density_target(b, alphabet, base)}
        for r in rhos:
            row[f"pc_rho{r:g}"] = bounds.pc_density_target(b, r, alphabet, base)
        rows.append(row)
    return rows


def _gnuplot_script(csv_name: str, rhos: list[float]) -> str:
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set xlabel 'beta'",
        "set ylabel 'leading factor'",
        f"plot '{csv_name}' using 1:2 with lines title 'random coding'",
    ]
    for i, r in enumerate(rhos):
        lines[-1] += f", '' using 1:{i + 3} with lines title 'partition rho={r:g}'"
    return "\n".join(lines) + "\n"


def cmd_density(args, out) -> int:
    base = _parse_base(args.log_base)
    rhos = args.rho or [0.2, 0.5, 1.0]
    rows = density_table(args.alphabet, base, rhos, args.beta_step)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    if args.out:
        Path(args.out).write_text(buf.getvalue())
    else:
        out.write(buf.getvalue())
    if args.gnuplot:
        if not args.out:
            raise UsageError("--gnuplot needs --out so the script can reference the CSV")
        Path(args.gnuplot).write_text(_gnuplot_script(Path(args.out).name, rhos))
    return EXIT_OK


def cmd_verify(args, out) -> int:
    checks = run_suites(args.suite or ["all"])
    for c in checks:
        out.write(c.line() + "\n")
    failed = sum(not c.passed for c in checks)
    out.write(f"{len(checks) - failed}/{len(checks)} checks passed\n")
    return EXIT_OK if failed == 0 else EXIT_VERIFY


def _ints(s: str) -> list[int]:
    return [int(x) for x in s.replace(" ", "").strip("()[]").split(",") if x]


def _codec_sizes(args):
    if args.neff is not None:
        if args.subsets is None:
            raise UsageError("--neff needs --subsets")
        return sizes_for_partition(args.neff, args.subsets, n=args.n)
    return derive(_params(args))


def cmd_codec(args, out) -> int:
    sizes = _codec_sizes(args)
    doc: dict = {"n": sizes.n, "n_eff": sizes.n_eff, "num_subsets": sizes.num_subsets,
                 "subset_size": sizes.subset_size}
    op = args.op
    if op == "size":
        doc["codebook_size"] = str(codebook_size(sizes))
    elif op == "unrank":
        if args.index is None:
            raise UsageError("unrank needs --index")
        doc["index"] = str(args.index)
        doc["assignment"] = list(unrank(args.index, sizes).assignment)
    elif op == "rank":
        msg = _message_arg(args)
        doc["assignment"] = list(msg.assignment)
        doc["index"] = str(rank(msg, sizes))
    elif op == "encode":
        M = _merged(args, "M")
        if M is None:
            raise UsageError("encode needs --M")
        msg = unrank(args.index, sizes) if args.index is not None else _message_arg(args)
        cw = encode(msg, subset_counts(int(M), sizes), sizes)
        doc.update(assignment=list(msg.assignment), counts=list(cw.counts), index=str(rank(msg, sizes)))
    elif op == "decode":
        counts = _counts_arg(args)
        try:
            msg = decode(ReadCounts.of(counts), sizes, strict_zero_rule=not args.relaxed)
        except DecodeFailure as exc:
            doc.update(counts=counts, failure=str(exc))
        else:
            doc.update(counts=counts, assignment=list(msg.assignment), index=str(rank(msg, sizes)))
    out.write(json.dumps(doc) + "\n")
    return EXIT_OK


def _message_arg(args) -> PartitionMessage:
    if args.assignment:
        return PartitionMessage.of(_ints(args.assignment))
    if args.json:
        msg, _ = message_from_json(Path(args.json).read_text())
        return msg
    raise UsageError("give --assignment or --json")


def _counts_arg(args) -> list[int]:
    if args.counts:
        return _ints(args.counts)
    if args.json:
        doc = json.loads(Path(args.json).read_text())
        return [int(c) for c in doc["counts"]]
    raise UsageError("give --counts or --json")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dnastore", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("pc-run", help="one partition-code Monte Carlo experiment")
    _add_param_flags(p)
    _experiment_flags(p)
    p.set_defaults(func=cmd_pc_run)

    p = sub.add_parser("rc-run", help="one random-coding Monte Carlo experiment")
    _add_param_flags(p)
    _experiment_flags(p)
    p.add_argument("--codebook-size", dest="codebook_size", type=int)
    p.add_argument("--save-codebook", help="write the generated codebook as JSON")
    p.add_argument("--load-codebook", help="use a codebook JSON instead of generating one")
    p.set_defaults(func=cmd_rc_run)

    p = sub.add_parser("sweep", help="run a grid of experiments into a resumable CSV")
    p.add_argument("--grid", required=True, help="JSON list of experiment specs")
    p.add_argument("--out", required=True, help="CSV path; a .json summary is written beside it")
    p.add_argument("--parallel-experiments", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bounds", help="evaluate the closed-form error bounds as JSON")
    _add_param_flags(p)
    p.add_argument("--delta", type=float, help="also evaluate the random-coding bound at this delta")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("density", help="leading-factor table for both schemes (CSV)")
    p.add_argument("--alphabet", type=int, default=2)
    p.add_argument("--log-base", default="2", help="2, 10, e ... (default 2)")
    p.add_argument("--rho", type=float, action="append", help="partition rho (repeatable)")
    p.add_argument("--beta-step", type=float, default=0.05)
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.add_argument("--gnuplot", help="also write a gnuplot script plotting --out")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("verify", help="run the numeric self-check suites")
    p.add_argument("--suite", action="append", help="mathkit, codec, oracle, density or all")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("codec", help="partition-code encode/decode/rank/unrank tooling")
    p.add_argument("op", choices=["unrank", "rank", "encode", "decode", "size"])
    p.add_argument("--neff", type=int, help="number of used types (with --subsets)")
    p.add_argument("--subsets", type=int, help="number of subsets")
    p.add_argument("--n", type=int, help="total types when larger than n_eff")
    p.add_argument("--index", type=int)
    p.add_argument("--assignment", help="comma-separated subset labels, e.g. 1,1,2,2")
    p.add_argument("--counts", help="comma-separated read counts")
    p.add_argument("--json", help="message/codeword JSON file")
    p.add_argument("--relaxed", action="store_true")
    _add_param_flags(p)
    p.set_defaults(func=cmd_codec)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = sys.stdout
    try:
        args._config = load_config(args.config) if getattr(args, "config", None) else {}
        return args.func(args, out)
    except OSError as exc:
        print(f"dnastore: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, ParameterError, ValueError, KeyError) as exc:
        print(f"dnastore: error: {exc}", file=sys.stderr)
        return EXIT_PARAM


if __name__ == "__main__":
    sys.exit(main())
