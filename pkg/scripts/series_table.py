"""Tabulate R - 1, partial sums and partial products for the registered stage families."""

import argparse
from fractions import Fraction

from lpuhf.criteria import series_report, sum_product_consistency
from lpuhf.tensor_type import FamilyRecipe

FAMILIES = [
    ("power a=2", FamilyRecipe("power", {"c": Fraction(1), "a": Fraction(2)})),
    ("power a=1", FamilyRecipe("power", {"c": Fraction(1), "a": Fraction(1)})),
    ("geometric q=1/2", FamilyRecipe("geometric", {"c": Fraction(1), "q": Fraction(1, 2)})),
    ("log a=2", FamilyRecipe("log", {"c": Fraction(1), "a": Fraction(2)})),
    ("log a=1", FamilyRecipe("log", {"c": Fraction(1), "a": Fraction(1)})),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--p", default="2")
    args = ap.parse_args()
    print(f"{'family':<18}{'sum(R-1)':>12}{'prod R':>14}{'consistent':>12}  verdict")
    for name, recipe in FAMILIES:
        rep = series_report(recipe, args.p, args.n)
        ok = sum_product_consistency([1 + t for t in rep.terms])
        print(f"{name:<18}{rep.partial_sums[-1]:>12.5f}{rep.partial_products[-1]:>14.5f}{str(ok):>12}  {rep.verdict}")


if __name__ == "__main__":
    main()
