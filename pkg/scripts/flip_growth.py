"""Norm of the flip witness v_n across stages of K_{2,gamma} stage sequences.

The witness norm in the doubled stage is compared with prod_k R_k^2, the
largest value the doubled p-bound allows.
"""

import argparse
from fractions import Fraction

from lpuhf.criteria import flip_witness
from lpuhf.simsys import p_bound
from lpuhf.tensor_type import FamilyRecipe


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--gamma", default="3")
    args = ap.parse_args()
    recipe = FamilyRecipe("constant", {"c": Fraction(args.gamma)})
    spec = recipe.spec(args.n)
    bound = Fraction(1)
    print(f"{'n':>3}{'dim':>8}{'lower':>12}{'upper':>12}{'prod R^2':>12}")
    for n in range(args.n + 1):
        w = flip_witness(spec, n)
        if n:
            bound *= p_bound(spec.systems[n - 1], spec.p).exact_value ** 2
        print(f"{n:>3}{w.v.shape[0]:>8}{w.norm.lower:>12.4f}{w.norm.upper:>12.4f}{float(bound):>12.4f}")


if __name__ == "__main__":
    main()
