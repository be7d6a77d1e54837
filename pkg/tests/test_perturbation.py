import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import diagonal_systems
from lpuhf import exact as ex
from lpuhf.core_spaces import vector_norm
from lpuhf.errors import InputError, StructureError, UnsupportedError
from lpuhf.matalg import flip_element, matrix_unit, matrix_units
from lpuhf.perturbation import (
    FIRST,
    block_compression,
    diagonal_lower_bound,
    multiplicative_defect,
    partial_products,
    phase_positive_split,
    polar_split,
    sign_selection,
    skewed_embedding,
    spatialize,
)
from lpuhf.pnorm import opnorm
from lpuhf.simsys import SimilaritySystem, basic_system, gamma_corner_system, rep_matrix
from lpuhf.spatial_check import is_spatial_rep

I = ex.QQi(0, 1)


def diag(*vals):
    out = ex.zeros((len(vals), len(vals)), exact=True)
    for j, v in enumerate(vals):
        out[j, j] = v if isinstance(v, ex.QQi) else Fraction(v)
    return out


@pytest.mark.parametrize("s, beta, w, u", [
    (diag(2, 1), 1, diag(2, 1), diag(1, 1)),
    (diag(I, I), 1, diag(1, 1), diag(I, I)),
    (diag(1, -3), 1, diag(1, 3), diag(1, -1)),
])
def test_phase_positive_split_examples(s, beta, w, u):
    sp = phase_positive_split(s)
    assert sp.beta == beta and ex.array_equal(sp.w, w) and ex.array_equal(sp.u, u)


def test_phase_positive_split_rejects_nondiagonal():
    with pytest.raises(UnsupportedError):
        phase_positive_split(np.array([[1.0, 1.0], [0.0, 1.0]]))


@given(st.lists(st.tuples(st.integers(1, 20), st.integers(1, 20), st.sampled_from([1, -1, I, -I])),
                min_size=1, max_size=4), st.sampled_from([1, Fraction(3, 2), 2, 3]))
def test_phase_positive_split_identities(entries, p):
    s = diag(*[ph * Fraction(a, b) for a, b, ph in entries])
    sp = phase_positive_split(s, p)
    assert ex.array_equal(sp.w @ sp.u * sp.beta, s)
    assert all(sp.w[j, j] >= 1 for j in range(len(entries)))
    w = ex.to_float(sp.w)
    R = float(sp.R)
    one = np.eye(len(entries))
    assert opnorm(w, p).upper == pytest.approx(R, rel=1e-12)
    assert opnorm(w - one, p).upper == pytest.approx(R - 1, abs=1e-12)
    assert opnorm(np.linalg.inv(w), p).upper == pytest.approx(1.0, rel=1e-12)
    assert opnorm(np.linalg.inv(w) - one, p).upper == pytest.approx(1 - 1 / R, abs=1e-12)


def test_spatialize_basic():
    sp = spatialize(basic_system(2), 2)
    assert sp.residual == 0 and ex.array_equal(sp.w(), ex.eye(2, exact=True))


def test_spatialize_two_index_p3():
    S = SimilaritySystem(2, ("1", "s"), (ex.eye(2, exact=True), diag(1, 2)), (Fraction(1, 2),) * 2, True)
    sp = spatialize(S, 3)
    assert sp.residual == 0 and sp.norms["w"] == pytest.approx(2.0)


def test_spatialize_corner_inverse_gap():
    sp = spatialize(gamma_corner_system(2, 5), 2)
    assert sp.norms["w_inv_minus_1"] == pytest.approx(1 - 1 / 5, abs=1e-12)


@settings(max_examples=20)
@given(diagonal_systems(), st.sampled_from([Fraction(3, 2), 2, 3]))
def test_spatialize_reconstructs_rep(S, p):
    sp = spatialize(S, p)
    assert sp.residual == 0
    W, Wi = sp.w(), sp.w_inv()
    for x in matrix_units(S.d).values():
        assert ex.array_equal(W @ sp.tau(x) @ Wi, rep_matrix(S, x))
    assert is_spatial_rep(sp.tau_table(), S.d, p).spatial


def test_polar_examples():
    theta = 0.7
    rot = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    c, u = polar_split(rot)
    assert np.allclose(c, np.eye(2)) and np.allclose(u, rot)
    c, u = polar_split(np.diag([2.0, 1.0]))
    assert np.allclose(c, np.diag([2.0, 1.0])) and np.allclose(u, np.eye(2))


def test_polar_random_normalized(rng):
    for _ in range(100):
        s = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        s = s / np.linalg.svd(s, compute_uv=False)[-1]  # now ||s^-1||_2 = 1
        c, u = polar_split(s)
        assert np.allclose(c @ u, s)
        assert np.allclose(u @ u.conj().T, np.eye(3))
        ns = np.linalg.norm(s, 2)
        assert np.linalg.norm(c - np.eye(3), 2) <= ns - 1 + 1e-9
        assert np.linalg.norm(np.linalg.inv(c) - np.eye(3), 2) <= ns - 1 + 1e-9


def test_polar_singular():
    with pytest.raises(InputError):
        polar_split(np.diag([1.0, 0.0]))


def test_partial_products_identity():
    rep = partial_products([np.eye(2)] * 4, 2)
    assert rep.ok and rep.differences == [0.0] * 4


def test_partial_products_geometric():
    ws = [np.diag([1 + 2.0 ** -n, 1.0]) for n in range(1, 11)]
    rep = partial_products(ws, 3)
    assert rep.ok
    assert sum(rep.differences) < 2
    assert rep.M1 == pytest.approx(np.prod([1 + 2.0 ** -n for n in range(1, 11)]))
    tail = rep.differences[5:]
    assert all(b < a for a, b in zip(tail, tail[1:]))


def test_partial_products_harmonic():
    ws = [np.diag([1 + 1.0 / n, 1.0]) for n in range(1, 51)]
    rep = partial_products(ws, 2)
    assert rep.ok and rep.M1 == pytest.approx(51.0)


def test_sign_selection_equal_alphas():
    c = sign_selection([2, 2, 2], np.eye(3)[:, :1].repeat(1, axis=1) * 0 + np.array([[1.0], [0.5], [0.25]]), 2)
    assert c.bound == 1.0 and c.ok


def test_sign_selection_example():
    xi = np.array([[0.5, 0.0], [0.0, 0.5]])
    c = sign_selection([1, 4], xi, 2)
    assert c.bound == 2.0 and c.achieved >= 2 - 1e-9


def test_sign_selection_zero_alpha():
    with pytest.raises(InputError):
        sign_selection([0, 1], np.eye(2), 2)


@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 5), st.sampled_from([1, 2, 3]))
def test_sign_selection_bound(seed, d, p):
    rng = np.random.default_rng(seed)
    alpha = rng.uniform(0.1, 10, d) * np.exp(2j * np.pi * rng.uniform(size=d))
    xi = rng.standard_normal((d, 3)) + 1j * rng.standard_normal((d, 3))
    c = sign_selection(alpha, xi, p)
    assert c.ok
    # recompute the achieved sum independently
    xi_n = xi / vector_norm(xi.sum(axis=0), p)
    za = np.asarray(c.zeta) * alpha
    coef = za[c.j0] / za if c.side == FIRST else za / za[c.j0]
    assert vector_norm(coef @ xi_n, p) == pytest.approx(c.achieved, rel=1e-9)
    assert np.allclose(np.abs(c.zeta), 1)


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("gamma", [1, 4, 9, 100])
def test_diagonal_lower_bound_flip(d, gamma):
    val = diagonal_lower_bound(flip_element(d), gamma_corner_system(d, gamma), 2)
    assert val >= math.sqrt(gamma) - 1e-9


def test_diagonal_lower_bound_basic_and_exact_example():
    assert diagonal_lower_bound(flip_element(2), basic_system(2), 3) >= 1 - 1e-9
    assert diagonal_lower_bound(flip_element(2), gamma_corner_system(2, 9), 2) >= 3 - 1e-9


def test_diagonal_lower_bound_propagates_structure_errors():
    z = flip_element(2) + np.kron(matrix_unit(2, 1, 2), matrix_unit(2, 1, 2))
    with pytest.raises(StructureError):
        diagonal_lower_bound(z, gamma_corner_system(2, 4), 2)


def test_block_compression_unital_embedding():
    # x -> 1 (x) x is block diagonal in M_2 (x) M_2
    table = {jk: np.kron(np.eye(2), ex.to_float(e)) for jk, e in matrix_units(2).items()}
    rep = block_compression(table, 10, 1, 1.0, 2, 2)
    assert rep.offdiag_max == 0 and rep.ok
    for jk in table:
        assert np.allclose(rep.T_table[jk], table[jk])


@pytest.mark.parametrize("gamma", [10, 100, 1000])
def test_block_compression_skewed(gamma):
    table, M = skewed_embedding(gamma)
    rep = block_compression(table, gamma, 1, M, 2, 2)
    assert rep.ok and rep.offdiag_max > 0


def test_block_compression_decays_like_inverse_gamma():
    rng = np.random.default_rng(7)
    tests = [rng.standard_normal((2, 2)) for _ in range(10)]
    vals = []
    for g in (10, 100, 1000):
        table, _ = skewed_embedding(g)
        vals.append(block_compression(table, g, 1, 1.0, 2, 2, tests=tests).offdiag_max)
    assert vals[1] <= vals[0] / 10 * (1 + 1e-9) and vals[2] <= vals[1] / 10 * (1 + 1e-9)


def test_defect_of_homomorphism_is_zero():
    table = {jk: ex.to_float(e) for jk, e in matrix_units(2).items()}
    rep = multiplicative_defect(table, 2)
    assert rep.estimate == pytest.approx(0, abs=1e-12)


def test_defect_of_doubled_map():
    phi = {jk: np.kron(ex.to_float(e), np.eye(2)) for jk, e in matrix_units(2).items()}
    T = {jk: 2 * v for jk, v in phi.items()}
    rep = multiplicative_defect(T, 2, n_random=0)
    T_one = sum(T[(j, j)] for j in (1, 2))
    defect_one = T_one - T_one @ T_one  # T(1 * 1) - T(1) T(1)
    phi_one = sum(phi[(j, j)] for j in (1, 2))
    assert np.allclose(defect_one, -2 * phi_one)
    assert rep.estimate > 0


def test_defect_johnson_bound(rng):
    phi = {jk: np.kron(ex.to_float(e), np.eye(2)) for jk, e in matrix_units(2).items()}
    u, v = rng.standard_normal(4), rng.standard_normal(4)
    pert = 0.01 * np.outer(u, v) / (np.linalg.norm(u) * np.linalg.norm(v))
    T = {jk: m + (pert if jk == (1, 2) else 0) for jk, m in phi.items()}
    rep = multiplicative_defect(T, 2, phi_table=phi)
    assert rep.distance_upper_bound == pytest.approx(0.01, rel=1e-9)
    assert rep.holds
