"""Command-line entry point: gen | sample | recover | scaling | counterexample | lemmas."""
from __future__ import annotations

import argparse
import csv
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bench, lemmas
from .curated import curated_svd
from .matrixio import MatrixFormatError, read_model, read_observation, write_matrix
from .models import gen_model, sample
from .oracles import normalized_l1
from .types import CuratedConfig, Observation

EXIT_OK, EXIT_INVALID, EXIT_LEMMA_FAILURE = 0, 1, 2

RECOVER_COLUMNS = [
    "k", "r", "model", "x_total", "normalized_l1", "zeroed_weight", "restarts", "runtime_ms",
]


def _spec(args):
    if not args.config:
        raise ValueError("--config is required")
    return bench.with_overrides(bench.load_spec(args.config), seed=args.seed, threads=args.threads)


def cmd_gen(args) -> int:
    spec = _spec(args)
    model_spec = spec.model_spec
    if args.seed is not None:
        model_spec = replace(model_spec, seed=args.seed)
    write_matrix(args.out, gen_model(model_spec))
    return EXIT_OK


def cmd_sample(args) -> int:
    model = read_model(args.model)
    write_matrix(args.out, sample(model, args.seed or 0, exact_multinomial=args.exact_multinomial))
    return EXIT_OK


def _write_estimate(path, obs: Observation, r: int, estimate: np.ndarray) -> None:
    nz = np.nonzero(estimate)
    header = " ".join([str(obs.k), str(r), *obs.model_kind.header_tokens()])
    lines = [header] + [f"{i} {j} {float(estimate[i, j])!r}" for i, j in zip(*nz)]
    Path(path).write_text("\n".join(lines) + "\n")


def cmd_recover(args) -> int:
    obs = read_observation(args.x)
    if args.config:
        cfg = _spec(args).cfg
    else:
        r = args.r or obs.r
        if not r:
            raise ValueError("rank unknown: pass --r or --config")
        cfg = CuratedConfig(r=r, seed=args.seed or 0, restarts=args.restarts, threads=args.threads or 1)
    start = time.perf_counter()
    outcome = curated_svd(obs, cfg)
    elapsed = (time.perf_counter() - start) * 1000.0
    if args.out:
        _write_estimate(args.out, obs, cfg.r, outcome.estimate)
    row = {
        "k": obs.k, "r": cfg.r, "model": str(obs.model_kind), "x_total": obs.total,
        "normalized_l1": normalized_l1(read_model(args.model), outcome.estimate) if args.model else None,
        "zeroed_weight": outcome.zeroed_weight, "restarts": cfg.restarts_for(obs.k),
        # wall time breaks bit-exact reruns, so it is opt-in
        "runtime_ms": elapsed if args.timing else None,
    }
    if args.csv:
        new = not Path(args.csv).exists()
        with open(args.csv, "a", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=RECOVER_COLUMNS)
            if new:
                writer.writeheader()
            writer.writerow({c: bench._cell(row[c]) for c in RECOVER_COLUMNS})
    else:
        writer = csv.DictWriter(sys.stdout, fieldnames=RECOVER_COLUMNS)
        writer.writeheader()
        writer.writerow({c: bench._cell(row[c]) for c in RECOVER_COLUMNS})
    return EXIT_OK


def cmd_scaling(args) -> int:
    spec = _spec(args)
    out = args.out or spec.output_path
    if not out:
        raise ValueError("no output path: pass --out or set output_path")
    rows = bench.run_scaling(spec)
    bench.write_csv(out, bench.SCALING_COLUMNS, rows)
    for row in rows:
        if row["row_type"] == "summary":
            print(f"{row['method']}: slope={row['slope']}")
    return EXIT_OK


def cmd_counterexample(args) -> int:
    if args.config:
        spec = _spec(args)
        k, n_max, trials = spec.model_spec.k, spec.model_spec.n_max, spec.trials
        seed = spec.seed
    else:
        k, n_max, trials, seed = args.k, args.n_max, args.trials, args.seed or 0
    if not k or not n_max:
        raise ValueError("counterexample needs --k and --n-max (or --config)")
    rows = bench.run_counterexample(k, n_max, trials, seed=seed, threads=args.threads or 1)
    if args.out:
        bench.write_csv(args.out, bench.COUNTEREXAMPLE_COLUMNS, rows)
    print(f"k={k} n_max={n_max}: empirical P(zero block) = {rows[-1]['empirical_probability']}")
    return EXIT_OK


def cmd_lemmas(args) -> int:
    results = lemmas.run_all(seed=args.seed or 0)
    for res in results:
        print(res.line())
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} lemma suites passed")
    return EXIT_LEMMA_FAILURE if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment file (key = value sections, or .json)")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("--out", help="output path")

    parser = argparse.ArgumentParser(prog="curatedsvd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("gen", parents=[common], help="write a model matrix file").set_defaults(func=cmd_gen)

    p = sub.add_parser("sample", parents=[common], help="draw X ~ M from a model file")
    p.add_argument("--model", required=True)
    p.add_argument("--exact-multinomial", action="store_true")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("recover", parents=[common], help="run Curated SVD on an observation file")
    p.add_argument("--x", required=True, help="observation file")
    p.add_argument("--model", help="true model file, enables normalized_l1")
    p.add_argument("--r", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--csv", help="append the report row here instead of stdout")
    p.add_argument("--timing", action="store_true", help="fill the runtime_ms column")
    p.set_defaults(func=cmd_recover)

    sub.add_parser("scaling", parents=[common], help="error vs mass (or p) grid").set_defaults(func=cmd_scaling)

    p = sub.add_parser("counterexample", parents=[common], help="zero-block counterexample")
    p.add_argument("--k", type=int)
    p.add_argument("--n-max", type=int)
    p.add_argument("--trials", type=int, default=10)
    p.set_defaults(func=cmd_counterexample)

    sub.add_parser("lemmas", parents=[common], help="run the lemma property suites").set_defaults(func=cmd_lemmas)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, KeyError, MatrixFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
