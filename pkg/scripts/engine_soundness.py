"""Compare certified p-norm intervals with random sphere sampling on random complex matrices."""

import argparse
from fractions import Fraction

import numpy as np

from lpuhf.pnorm import opnorm


def sample_max(a, p, n, rng):
    v = rng.standard_normal((n, a.shape[1])) + 1j * rng.standard_normal((n, a.shape[1]))
    num = (np.abs(v @ a.T) ** p).sum(axis=1) ** (1 / p)
    den = (np.abs(v) ** p).sum(axis=1) ** (1 / p)
    return float((num / den).max())


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=4)
    ap.add_argument("--matrices", type=int, default=50)
    ap.add_argument("--samples", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    for p in (Fraction(3, 2), Fraction(5, 2), Fraction(4)):
        gaps, widths, bad = [], [], 0
        for _ in range(args.matrices):
            a = rng.standard_normal((args.size,) * 2) + 1j * rng.standard_normal((args.size,) * 2)
            iv = opnorm(a, p)
            s = sample_max(a, float(p), args.samples, rng)
            bad += s > iv.upper
            gaps.append(iv.lower - s)
            widths.append(iv.width / iv.upper)
        print(f"p={str(p):>4}  violations={bad}  min(lower - sampled)={min(gaps):.2e}  "
              f"median relative width={np.median(widths):.3f}")


if __name__ == "__main__":
    main()
