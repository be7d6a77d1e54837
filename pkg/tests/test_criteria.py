import math
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from lpuhf import exact as ex
from lpuhf.criteria import (
    CONVERGENT_SPATIAL,
    DIVERGENT_NONAMENABLE,
    UNDETERMINED,
    SeriesReport,
    family_verdict,
    flip_conjugation_residual,
    flip_witness,
    rho_norm,
    rho_tensor_norm,
    series_report,
    sum_product_consistency,
)
from lpuhf.errors import InputError, UnsupportedError
from lpuhf.matalg import matrix_units
from lpuhf.simsys import SimilaritySystem, basic_system, gamma_corner_system
from lpuhf.tensor_type import FamilyRecipe, StageSpec

N_SYM = sp.symbols("n", integer=True, positive=True)


def sympy_converges(recipe):
    """Oracle: sympy's own convergence test on sum (gamma(n) - 1)."""
    pr = {k: sp.Rational(v.numerator, v.denominator) for k, v in recipe.params.items()}
    n = N_SYM
    if recipe.kind == "power":
        term = pr["c"] * n ** -pr["a"]
    elif recipe.kind == "geometric":
        term = pr["c"] * pr["q"] ** n
    elif recipe.kind == "log":
        term = pr["c"] / (n * sp.log(n + 1) ** pr["a"])
    else:
        term = pr["c"] - 1
    if term == 0:
        return True
    return bool(sp.Sum(term, (n, 1, sp.oo)).is_convergent())


def test_power_family_verdicts():
    conv = series_report(FamilyRecipe("power", {"c": Fraction(1), "a": Fraction(2)}), 2, 20)
    div = series_report(FamilyRecipe("power", {"c": Fraction(1), "a": Fraction(1)}), 2, 20)
    assert conv.verdict == CONVERGENT_SPATIAL and div.verdict == DIVERGENT_NONAMENABLE
    assert conv.terms[1] == pytest.approx(0.25)


def test_hand_entered_stages_undetermined():
    systems = [gamma_corner_system(2, Fraction(k + 2, k + 1)) for k in range(10)]
    rep = series_report(StageSpec(tuple(systems)), 3, 10)
    assert rep.verdict == UNDETERMINED and len(rep.terms) == 10
    assert rep.partial_products[-1] == pytest.approx(11 / 1)


fractions = st.builds(Fraction, st.integers(0, 6), st.integers(1, 3))


@given(st.sampled_from(["power", "geometric", "log", "constant"]), fractions, fractions)
def test_verdicts_match_sympy(kind, c, t):
    if kind == "power":
        r = FamilyRecipe(kind, {"c": c, "a": t})
    elif kind == "geometric":
        r = FamilyRecipe(kind, {"c": c, "q": t})
    elif kind == "log":
        r = FamilyRecipe(kind, {"c": c, "a": t})
    else:
        r = FamilyRecipe(kind, {"c": 1 + c})
    verdict, _ = family_verdict(r)
    assert (verdict == CONVERGENT_SPATIAL) == sympy_converges(r)


@given(st.sampled_from(["power", "geometric"]), fractions, fractions, st.sampled_from([1, 2, 3]))
def test_report_invariants(kind, c, t, p):
    key = "a" if kind == "power" else "q"
    rep = series_report(FamilyRecipe(kind, {"c": c, key: t}), p, 12)
    assert all(x >= 0 for x in rep.terms)
    assert all(b >= a for a, b in zip(rep.partial_sums, rep.partial_sums[1:]))
    assert all(b >= a >= 1 for a, b in zip(rep.partial_products, rep.partial_products[1:]))


def test_report_rejects_negative_terms():
    with pytest.raises(ValueError):
        SeriesReport([-0.1], [0], [1], UNDETERMINED, "")


def test_sum_product_examples():
    geo = [1 + Fraction(1, 2 ** n) for n in range(1, 31)]
    assert sum_product_consistency(geo)
    assert math.prod(float(a) for a in geo) < math.e
    assert sum_product_consistency([1] * 10)
    harm = [1 + Fraction(1, n) for n in range(1, 1001)]
    assert sum_product_consistency(harm, 1000)
    assert math.prod(harm) == 1001


def test_sum_product_rejects_small_alpha():
    with pytest.raises(InputError):
        sum_product_consistency([1, Fraction(1, 2)])


@given(st.lists(st.floats(1.0, 50.0), min_size=1, max_size=200))
def test_sum_product_holds_generally(alphas):
    assert sum_product_consistency(alphas)


@pytest.mark.parametrize("dims", [(2,), (2, 3), (2, 2, 2)])
def test_flip_witness_spatial_norm_one(dims):
    spec = StageSpec.from_dims(dims)
    w = flip_witness(spec, len(dims))
    assert w.involution and w.norm.exact_value == 1


def test_flip_witness_corner_stage_within_sandwich():
    gamma = 3
    w = flip_witness(StageSpec((gamma_corner_system(2, gamma),)), 1)
    assert 1 <= w.norm.lower <= w.norm.upper <= gamma ** 2


def test_flip_witness_stage_zero():
    w = flip_witness(StageSpec.from_dims((2,)), 0)
    assert w.norm.exact_value == 1 and w.v.shape == (1, 1)


def test_flip_witness_involution_exact():
    spec = StageSpec((gamma_corner_system(2, 2), basic_system(3)))
    for n in range(3):
        w = flip_witness(spec, n)
        assert ex.array_equal(w.v @ w.v, ex.eye(w.v.shape[0], exact=True))


def test_flip_residual_matrix_units():
    spec = StageSpec((gamma_corner_system(2, 4),))
    for a in matrix_units(2).values():
        for b in matrix_units(2).values():
            assert flip_conjugation_residual(spec, 1, 1, a, b) == 0


def test_flip_residual_identity_and_lower_stage(rng):
    spec = StageSpec((gamma_corner_system(2, 3), basic_system(2)))
    one = ex.eye(2, exact=True)
    assert flip_conjugation_residual(spec, 1, 2, one, one) == 0
    a, b = rng.standard_normal((2, 2)), rng.standard_normal((2, 2))
    assert flip_conjugation_residual(spec, 1, 2, a, b) == 0


def test_rho_tensor_examples():
    assert rho_tensor_norm(gamma_corner_system(2, 5), 2).exact_value == 25
    assert rho_tensor_norm(basic_system(3), 3).exact_value == 1
    half = Fraction(1, 2)
    S = SimilaritySystem(2, ("1", "s"), (ex.eye(2, exact=True), np.diag([Fraction(1), Fraction(2)]).astype(object)),
                         (half, half), True)
    assert rho_tensor_norm(S, 3).exact_value == 4


def test_rho_tensor_nondiagonal():
    S = SimilaritySystem(2, ("1",), (np.eye(2),), (1.0,), False)
    with pytest.raises(UnsupportedError):
        rho_tensor_norm(S, 2)


@pytest.mark.parametrize("p", [Fraction(3, 2), 2, 3])
def test_rho_terms_equal_series_terms(p):
    recipe = FamilyRecipe("power", {"c": Fraction(2), "a": Fraction(3, 2)})
    rep = series_report(recipe, p, 8)
    rho_terms = [rho_norm(recipe.system(n), p).lower - 1 for n in range(1, 9)]
    assert rho_terms == pytest.approx(rep.terms, rel=1e-12)
