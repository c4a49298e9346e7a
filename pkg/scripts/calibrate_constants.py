"""Sweep (c_tau, c_w) on the heavy-rows instance and report what deletion does.

Prints, per setting, the median normalized L1 error, the median zeroed
weight, and how often the boosted rows end up zeroed. Useful for seeing
where row deletion starts to fire; the package defaults stay at 1.0.

    python3 scripts/calibrate_constants.py --trials 5
"""
import argparse
import itertools
from dataclasses import replace

import numpy as np

from curatedsvd.bench import derive_seed
from curatedsvd.curated import curated_svd
from curatedsvd.models import ModelSpec, gen_model, heavy_row_indices, sample
from curatedsvd.oracles import normalized_l1
from curatedsvd.types import CuratedConfig


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--k", type=int, default=256)
    parser.add_argument("--mass", type=float, default=2.0**15)
    parser.add_argument("--trials", type=int, default=5)
    parser.add_argument("--c-tau", type=float, nargs="+", default=[0.25, 0.5, 1.0])
    parser.add_argument("--c-w", type=float, nargs="+", default=[1.0, 1e2, 1e4, 1e6])
    args = parser.parse_args()

    spec = ModelSpec("heavy_rows", k=args.k, r=2, target_mass=args.mass, count=5, boost=100.0)
    model = gen_model(spec)
    heavy = set(heavy_row_indices(spec).tolist())
    base = CuratedConfig(r=2)

    print(f"{'c_tau':>6} {'c_w':>8} {'median_l1':>10} {'zeroed_w':>9} {'heavy_hit':>9} {'rows':>5}")
    for c_tau, c_w in itertools.product(args.c_tau, args.c_w):
        errs, weights, hits, counts = [], [], [], []
        for t in range(args.trials):
            seed = derive_seed(0, 0, t)
            out = curated_svd(sample(model, seed), replace(base, c_tau=c_tau, c_w=c_w, seed=seed))
            errs.append(normalized_l1(model, out.estimate))
            weights.append(out.zeroed_weight)
            hits.append(len(heavy & out.zeroed_rows) / len(heavy))
            counts.append(len(out.zeroed_rows))
        print(f"{c_tau:6.2f} {c_w:8.0e} {np.median(errs):10.4f} {np.median(weights):9.2f} "
              f"{np.mean(hits):9.2f} {np.median(counts):5.0f}")


if __name__ == "__main__":
    main()
