import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lpuhf import exact as ex
from lpuhf.errors import CapacityError, InputError, StructureError
from lpuhf.matalg import (
    DELTA,
    DELTA_OP,
    ElementaryTensorSum,
    TensorIndexMap,
    delta,
    delta_op,
    diagonal_structure,
    flip_element,
    flip_from_group,
    kron,
    matrix_unit,
    matrix_units,
    permute_factors,
    projective_lower_via_contraction,
    projective_upper,
    signed_permutation_group,
    spatial_norm_fn,
    symmetrize_diagonal,
)
from lpuhf.pnorm import opnorm


def frac_diag(*vals):
    return np.diag([Fraction(v) for v in vals]).astype(object)


@given(st.lists(st.integers(1, 4), min_size=1, max_size=4), st.data())
def test_index_map_round_trip(dims, data):
    m = TensorIndexMap(tuple(dims))
    f = data.draw(st.integers(0, m.size - 1))
    assert m.flat(m.multi(f)) == f


def test_matrix_unit_examples():
    assert ex.array_equal(matrix_unit(2, 1, 1), frac_diag(1, 0))
    e = matrix_unit(2, 1, 2)
    assert e[0, 1] == 1 and sum(bool(x) for x in e.ravel()) == 1
    with pytest.raises(InputError):
        matrix_unit(2, 3, 1)


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_matrix_unit_relations(d):
    u = matrix_units(d)
    zero = ex.zeros((d, d), exact=True)
    for (j, k), (kk, l) in itertools.product(u, u):
        want = u[(j, l)] if k == kk else zero
        assert ex.array_equal(u[(j, k)] @ u[(kk, l)], want)


@pytest.mark.parametrize("d, size", [(1, 2), (2, 8), (3, 48)])
def test_signed_permutation_group(d, size):
    g = signed_permutation_group(d)
    assert len(g) == size
    keys = {tuple(x.ravel()) for x in g}
    for a in g:
        assert opnorm(a, 3).exact_value == 1
    if d <= 3:
        assert all(tuple((a @ b).ravel()) in keys for a in g for b in g)


def test_signed_permutation_cap():
    with pytest.raises(CapacityError):
        signed_permutation_group(5)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_flip_square(d):
    y = flip_element(d)
    assert ex.array_equal(y @ y, ex.eye(d * d, exact=True) / Fraction(d * d))
    v = y * d
    assert ex.array_equal(v @ v, ex.eye(d * d, exact=True))


@pytest.mark.parametrize("d", [2, 3, 4])
@pytest.mark.parametrize("p", [1, Fraction(3, 2), 2, 3])
def test_flip_norm(d, p):
    iv = opnorm(flip_element(d), p)
    assert iv.exact_value == Fraction(1, d) and iv.width == 0


@pytest.mark.parametrize("d", [2, 3])
def test_flip_swaps_tensor_factors(d):
    y = flip_element(d)
    yinv = ex.inv(y)
    u = matrix_units(d)
    for a, b in itertools.product(u.values(), u.values()):
        assert ex.array_equal(y @ np.kron(a, b) @ yinv, np.kron(b, a))


@pytest.mark.parametrize("d", [1, 2, 3])
def test_flip_from_group(d):
    assert ex.array_equal(flip_from_group(d), flip_element(d))


def test_kron_examples():
    e = kron(matrix_unit(2, 1, 1), matrix_unit(2, 2, 2))
    assert e[1, 1] == 1 and sum(bool(x) for x in e.ravel()) == 1
    assert ex.array_equal(kron(frac_diag(1, 2), frac_diag(1, 3)), frac_diag(1, 3, 2, 6))


@given(st.permutations(range(3)), st.lists(st.integers(1, 5), min_size=3, max_size=3), st.sampled_from([1, 2, 3]))
def test_kron_norm_multiplicative_on_monomials(perm, vals, p):
    a = ex.zeros((3, 3), exact=True)
    for c, r in enumerate(perm):
        a[r, c] = Fraction(vals[c])
    b = frac_diag(1, 2)
    assert opnorm(kron(a, b), p).exact_value == opnorm(a, p).exact_value * opnorm(b, p).exact_value


@pytest.mark.parametrize("d", [2, 3])
def test_delta_of_flip_is_identity(d):
    z = ElementaryTensorSum.flip(d)
    assert ex.array_equal(delta(z), ex.eye(d, exact=True))
    assert ex.array_equal(delta_op(z), ex.eye(d, exact=True))


def test_delta_examples():
    a = frac_diag(2, 3)
    assert ex.array_equal(delta(ElementaryTensorSum([(a, ex.eye(2, exact=True))])), a)
    z = ElementaryTensorSum([(matrix_unit(2, 1, 2), matrix_unit(2, 2, 1))])
    assert not ex.array_equal(delta(z), delta_op(z))


def test_delta_shape_mismatch():
    with pytest.raises(InputError):
        delta(ElementaryTensorSum([(ex.eye(2, exact=True), ex.eye(3, exact=True))]))


@pytest.mark.parametrize("d", [2, 3])
def test_projective_pinning(d):
    norm = spatial_norm_fn(2)
    up = projective_upper(ElementaryTensorSum.flip_group_average(d), norm)
    lo = projective_lower_via_contraction(ElementaryTensorSum.flip(d), DELTA, norm)
    assert up == 1 and lo == 1
    assert projective_upper(ElementaryTensorSum.flip(d), norm) == d


def test_projective_single_term_and_zero():
    norm = spatial_norm_fn(3)
    a, b = frac_diag(2, 1), frac_diag(1, 5)
    assert projective_upper(ElementaryTensorSum([(a, b)]), norm) == 10
    zero = ElementaryTensorSum([(ex.zeros((2, 2), exact=True), ex.eye(2, exact=True))])
    assert projective_lower_via_contraction(zero, DELTA_OP, norm) == 0


def test_symmetrize_keeps_flip():
    z = symmetrize_diagonal(ElementaryTensorSum.flip(2), signed_permutation_group(2))
    assert ex.array_equal(z.flatten(), flip_element(2))


def test_symmetrize_perturbed_input():
    one = ex.eye(2, exact=True)
    z0 = ElementaryTensorSum.flip(2) + ElementaryTensorSum([(Fraction(1, 3) * one, one)])
    group = signed_permutation_group(2)
    z = symmetrize_diagonal(z0, group)
    assert ex.array_equal(delta(z), one)
    zf = z.flatten()
    for g in group:
        assert ex.array_equal(np.kron(g, one) @ zf, zf @ np.kron(one, g))


def test_symmetrize_trivial_group():
    a = frac_diag(2, 4)
    z0 = ElementaryTensorSum([(a, ex.eye(2, exact=True))])
    z = symmetrize_diagonal(z0, [ex.eye(2, exact=True)])
    assert ex.array_equal(z.flatten(), np.kron(ex.eye(2, exact=True), ex.eye(2, exact=True)))


def test_symmetrize_singular_delta():
    z0 = ElementaryTensorSum([(matrix_unit(2, 1, 1), matrix_unit(2, 1, 1))])
    with pytest.raises(InputError):
        symmetrize_diagonal(z0, [ex.eye(2, exact=True)])


@pytest.mark.parametrize("d", [2, 3])
def test_diagonal_structure_of_flip(d):
    pieces = diagonal_structure(flip_element(d), d, 1)
    for (l, k), z in pieces.items():
        assert z[0, 0] == (Fraction(1, d) if l == k else 0)


def test_diagonal_structure_d1():
    z = np.array([[Fraction(1)]], dtype=object)
    assert diagonal_structure(z, 1, 1)[(1, 1)][0, 0] == 1


def test_diagonal_structure_rejects_noncommuting():
    one = ex.eye(2, exact=True)
    z = np.kron(one, one) + np.kron(matrix_unit(2, 1, 2), matrix_unit(2, 1, 2))
    with pytest.raises(StructureError, match="e_"):
        diagonal_structure(z, 2, 1)


def test_diagonal_structure_rejects_perturbed_flip():
    z = flip_element(2) + np.kron(matrix_unit(2, 1, 1), matrix_unit(2, 2, 2))
    with pytest.raises(StructureError):
        diagonal_structure(z, 2, 1)


@pytest.mark.parametrize("d1, d2", [(2, 2), (2, 3)])
def test_flip_tensor_compatibility(d1, d2):
    y = flip_element(d1 * d2)
    # (d1 d2) (x) (d1 d2) = (d1, d2, d1', d2') -> (d1, d1', d2, d2')
    perm = permute_factors(y, (d1, d2, d1, d2), (0, 2, 1, 3))
    assert ex.array_equal(perm, kron(flip_element(d1), flip_element(d2)))


@pytest.mark.parametrize("d", [2, 3])
def test_flip_invariant_under_signed_permutation(d):
    y = flip_element(d)
    for u in signed_permutation_group(d):
        uu = np.kron(u, u)
        assert ex.array_equal(uu @ y @ uu.T, y)
