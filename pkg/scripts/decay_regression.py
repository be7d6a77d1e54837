"""Fit the off-diagonal block size of the skewed embedding against gamma on a log-log scale."""

import argparse

import numpy as np

from lpuhf.perturbation import block_compression, skewed_embedding


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--tests", type=int, default=50)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    tests = [rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)) for _ in range(args.tests)]
    gammas = np.logspace(1, 4, 7)
    maxima = []
    for g in gammas:
        table, M = skewed_embedding(float(g))
        rep = block_compression(table, float(g), 1, M, 2, 2, tests=tests)
        maxima.append(rep.offdiag_max)
        print(f"gamma={g:10.1f}  offdiag={rep.offdiag_max:.3e}  bound={M / g:.3e}  ok={rep.ok}")
    slope = np.polyfit(np.log(gammas), np.log(maxima), 1)[0]
    print(f"log-log slope {slope:.4f}")


if __name__ == "__main__":
    main()
