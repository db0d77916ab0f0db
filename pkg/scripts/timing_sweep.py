#!/usr/bin/env python3
"""Measure how estimation time scales with sample size when the random
effects live on a fixed set of locations: the per-iteration cost should
be dominated by the basis dimension, not N, once the inner products are
formed.

Example:
    python3 scripts/timing_sweep.py --sizes 1000 5000 10000 --repeats 3
"""

import argparse
import sys
import time

import numpy as np

from warpmix import basis, reml, warp


def build_problem(n, n_locations, max_vectors, rng):
    coords = rng.normal(size=(n_locations, 2))
    sb = basis.moran_eigenvectors(coords, max_vectors=max_vectors)
    cols = sb.vectors.shape[1]
    loc = rng.integers(0, n_locations, size=n)
    expanded = sb.vectors[loc]
    x1 = rng.uniform(size=n)
    x = np.column_stack([np.ones(n), x1, rng.normal(size=n)])
    field = expanded @ rng.normal(scale=0.6, size=cols)
    z0 = 1 + field + (2 + field) * x1 + 0.5 * x[:, 2] + 0.7 * rng.normal(size=n)
    y = np.sinh(np.clip(z0, -20, 20) / 2)
    blocks = [
        basis.EffectBlock(
            basis.SPATIAL_INTERCEPT, expanded,
            eigenvalues=sb.eigenvalues, covariate_index=0,
        ),
        basis.vc_block(expanded, sb.eigenvalues, x1, 1),
    ]
    return x, blocks, y


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[1000, 10000])
    p.add_argument("--locations", type=int, default=80)
    p.add_argument("--max-eigenvectors", type=int, default=50)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    medians = {}
    for n in args.sizes:
        x, blocks, y = build_problem(
            n, args.locations, args.max_eigenvectors,
            np.random.default_rng(args.seed),
        )
        runs = []
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            rf = reml.fit(x, blocks, y, warp.default_template(args.d))
            runs.append(time.perf_counter() - t0)
        medians[n] = float(np.median(runs))
        print(f"n={n:>8d}  median {medians[n]:7.2f}s  "
              f"runs {' '.join(f'{r:.2f}' for r in runs)}  "
              f"converged={rf.converged}")
    if len(args.sizes) >= 2:
        lo, hi = min(medians), max(medians)
        print(f"ratio t({hi}) / t({lo}) = {medians[hi] / medians[lo]:.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
