"""The matrix algebra M_d^p: matrix units, signed permutations, the flip element.

Tensor factors are always ordered lexicographically (first factor outermost),
so ``kron(a, b)`` realizes ``a (x) b`` and the identification
M_k (x) M_l = M_{kl} is ``np.kron``.  Elements of algebraic tensor products
are kept as explicit decompositions (:class:`ElementaryTensorSum`) so that
projective-norm certificates stay available.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import exact as ex
from .errors import CapacityError, InputError, StructureError
from .pnorm import opnorm

MAX_GROUP_DIM = 4


@dataclass(frozen=True)
class TensorIndexMap:
    """Lexicographic bijection between multi-indices and flat indices (0-based)."""

    factor_dims: tuple

    def __post_init__(self):
        object.__setattr__(self, "factor_dims", tuple(int(d) for d in self.factor_dims))
        if any(d < 1 for d in self.factor_dims):
            raise InputError("factor dimensions must be positive")

    @property
    def size(self):
        return math.prod(self.factor_dims)

    def flat(self, multi):
        return int(np.ravel_multi_index(tuple(multi), self.factor_dims))

    def multi(self, flat):
        return tuple(int(i) for i in np.unravel_index(flat, self.factor_dims))

    def permutation(self, order):
        """Flat-index permutation pi with new_flat = pi[old_flat] for reordered factors."""
        order = tuple(order)
        new_dims = tuple(self.factor_dims[k] for k in order)
        out = np.empty(self.size, dtype=int)
        for f in range(self.size):
            m = self.multi(f)
            out[f] = np.ravel_multi_index(tuple(m[k] for k in order), new_dims)
        return out


def permute_factors(x, dims, order):
    """Reorder tensor factors of a matrix on (x)_k C^{dims[k]} by index bijection.

    ``order[t]`` names which old factor ends up in position ``t``.  No
    arithmetic happens, so exact entries stay exact.
    """
    dims = tuple(dims)
    n = len(dims)
    x = np.asarray(x)
    if x.shape != (math.prod(dims),) * 2:
        raise InputError("matrix shape does not match factor dimensions")
    t = x.reshape(dims + dims)
    axes = list(order) + [n + k for k in order]
    new = tuple(dims[k] for k in order)
    return t.transpose(axes).reshape(math.prod(new), math.prod(new))


def matrix_unit(d, j, k, exact=True):
    """e_{j,k} in M_d with 1-based indices."""
    if not (1 <= j <= d and 1 <= k <= d):
        raise InputError(f"matrix unit index ({j}, {k}) out of range for d={d}")
    out = ex.zeros((d, d), exact)
    out[j - 1, k - 1] = Fraction(1) if exact else 1.0
    return out


def matrix_units(d, exact=True):
    return {(j, k): matrix_unit(d, j, k, exact) for j in range(1, d + 1) for k in range(1, d + 1)}


def kron(*mats):
    """Kronecker product under the lexicographic index map."""
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def signed_permutation_group(d):
    """All d x d matrices with exactly one +-1 in each row and column (2^d d! of them)."""
    if d > MAX_GROUP_DIM:
        raise CapacityError(f"signed permutation group of degree {d} exceeds the enumeration cap {MAX_GROUP_DIM}")
    if d < 1:
        raise InputError("degree must be positive")
    out = []
    for perm in itertools.permutations(range(d)):
        for signs in itertools.product((1, -1), repeat=d):
            g = ex.zeros((d, d), exact=True)
            for col, row in enumerate(perm):
                g[row, col] = Fraction(signs[col])
            out.append(g)
    return out


def flip_element(d, exact=True):
    """y_d = (1/d) sum_{r,s} e_{r,s} (x) e_{s,r} as a d^2 x d^2 matrix.

    ``d * y_d`` is the permutation matrix of the tensor swap, so y_d is monomial
    and its p-norm is exactly 1/d.
    """
    if d < 1:
        raise InputError("d must be positive")
    n = d * d
    out = ex.zeros((n, n), exact)
    val = Fraction(1, d) if exact else 1.0 / d
    for r in range(d):
        for s in range(d):
            # (e_rs (x) e_sr) has its single 1 at row (r, s), column (s, r)
            out[r * d + s, s * d + r] = val
    return out


def flip_from_group(d):
    """(1/|G|) sum_g g (x) g^{-1} over signed permutations, checked equal to y_d."""
    group = signed_permutation_group(d)
    total = ex.zeros((d * d, d * d), exact=True)
    for g in group:
        total = total + np.kron(g, g.T)  # g^{-1} = g^T for signed permutations
    total = total / Fraction(len(group))
    if not ex.array_equal(total, flip_element(d)):
        raise StructureError(f"group average does not reproduce y_{d}")
    return total


@dataclass
class ElementaryTensorSum:
    """sum_k a_k (x) b_k kept as an explicit list of pairs."""

    terms: list

    def __post_init__(self):
        self.terms = [(np.asarray(a), np.asarray(b)) for a, b in self.terms]
        if not self.terms:
            raise InputError("an elementary tensor sum needs at least one term")
        sa, sb = self.terms[0][0].shape, self.terms[0][1].shape
        if any(a.shape != sa or b.shape != sb for a, b in self.terms):
            raise InputError("inconsistent term shapes")

    @property
    def shapes(self):
        return self.terms[0][0].shape, self.terms[0][1].shape

    @property
    def exact(self):
        return all(ex.is_exact(a) and ex.is_exact(b) for a, b in self.terms)

    def flatten(self):
        """Kronecker view sum_k kron(a_k, b_k); injective on the algebraic tensor product."""
        out = None
        for a, b in self.terms:
            t = np.kron(a, b)
            out = t if out is None else out + t
        return out

    def left_mul(self, g):
        """(g (x) 1) z."""
        return ElementaryTensorSum([(g @ a, b) for a, b in self.terms])

    def right_mul(self, h):
        """z (1 (x) h)."""
        return ElementaryTensorSum([(a, b @ h) for a, b in self.terms])

    def scaled(self, c):
        return ElementaryTensorSum([(c * a, b) for a, b in self.terms])

    def __add__(self, other):
        return ElementaryTensorSum(self.terms + other.terms)

    @classmethod
    def flip(cls, d, exact=True):
        """y_d via its matrix-unit decomposition."""
        c = Fraction(1, d) if exact else 1.0 / d
        return cls([(c * matrix_unit(d, r, s, exact), matrix_unit(d, s, r, exact))
                    for r in range(1, d + 1) for s in range(1, d + 1)])

    @classmethod
    def flip_group_average(cls, d):
        """y_d as (1/|G|) sum_g g (x) g^{-1} over signed permutations."""
        group = signed_permutation_group(d)
        c = Fraction(1, len(group))
        return cls([(c * g, g.T) for g in group])


def _require_square_pair(z):
    (ra, ca), (rb, cb) = z.shapes
    if not (ra == ca == rb == cb):
        raise InputError("delta needs square factors of equal size")


def delta(z):
    """Multiplication map a (x) b -> ab."""
    _require_square_pair(z)
    out = None
    for a, b in z.terms:
        t = a @ b
        out = t if out is None else out + t
    return out


def delta_op(z):
    """Opposite multiplication a (x) b -> ba."""
    _require_square_pair(z)
    out = None
    for a, b in z.terms:
        t = b @ a
        out = t if out is None else out + t
    return out


def delta_flat(zf, m):
    """Delta on a flattened element of M_m (x) M_m: sum_t Z[(i,t),(t,k)]."""
    t = np.asarray(zf).reshape(m, m, m, m)
    return np.einsum("ittk->ik", t) if not ex.is_exact(zf) else _exact_contract(t, m, False)


def delta_op_flat(zf, m):
    t = np.asarray(zf).reshape(m, m, m, m)
    return np.einsum("tikt->ik", t) if not ex.is_exact(zf) else _exact_contract(t, m, True)


def _exact_contract(t, m, opposite):
    out = ex.zeros((m, m), exact=True)
    for i in range(m):
        for k in range(m):
            acc = Fraction(0)
            for s in range(m):
                acc = acc + (t[s, i, k, s] if opposite else t[i, s, s, k])
            out[i, k] = acc
    return out


def spatial_norm_fn(p, side="upper"):
    """Per-factor p-norm callable: the exact rational when known, else the chosen bound."""

    def norm(a):
        iv = opnorm(a, p)
        if iv.exact_value is not None:
            return iv.exact_value
        return iv.upper if side == "upper" else iv.lower

    return norm


def projective_upper(z, norm_fn):
    """sum_k ||a_k|| ||b_k||, an upper bound for ||z||_pi.

    Stays an exact ``Fraction`` when every factor norm is exact.
    """
    vals = [norm_fn(a) * norm_fn(b) for a, b in z.terms]
    if all(isinstance(v, (int, Fraction)) for v in vals):
        return sum(vals, Fraction(0))
    return math.fsum(float(v) for v in vals)


DELTA = "DELTA"
DELTA_OP = "DELTA_OP"


def projective_lower_via_contraction(z, contraction, norm_fn):
    """||c(z)|| for a contractive c : A (x)^ A -> A, a lower bound for ||z||_pi.

    ``norm_fn`` should return a certified *lower* bound for the target norm.
    ``contraction`` is DELTA, DELTA_OP, or a callable on the tensor sum.
    """
    if contraction == DELTA:
        val = delta(z)
    elif contraction == DELTA_OP:
        val = delta_op(z)
    elif callable(contraction):
        val = contraction(z)
    else:
        raise InputError(f"unknown contraction {contraction!r}")
    return norm_fn(val)


def symmetrize_diagonal(z0, group):
    """Average (h (x) 1) z1 (1 (x) h)^{-1} over a finite group, z1 = (Delta(z0)^{-1} (x) 1) z0.

    The result satisfies Delta(z) = 1 and (g (x) 1) z = z (1 (x) g) for every g
    in ``group``; both are verified (exactly for exact input).
    """
    dz = delta(z0)
    exact = z0.exact and all(ex.is_exact(g) for g in group)
    try:
        dinv = ex.inv(dz) if exact else np.linalg.inv(ex.to_float(dz))
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise InputError("Delta(z0) is singular") from exc
    z1 = z0.left_mul(dinv)
    terms = []
    n = len(group)
    c = Fraction(1, n) if exact else 1.0 / n
    for h in group:
        hinv = ex.inv(h) if exact else np.linalg.inv(ex.to_float(h))
        terms.extend((c * (h @ a), b @ hinv) for a, b in z1.terms)
    z = ElementaryTensorSum(terms)

    m = dz.shape[0]
    ident = ex.eye(m, exact)
    ok = ex.array_equal(delta(z), ident) if exact else np.allclose(ex.to_float(delta(z)), np.eye(m), atol=1e-10)
    if not ok:
        raise StructureError("symmetrized element does not satisfy Delta(z) = 1")
    zf = z.flatten()
    for g in group:
        lhs = np.kron(g, ex.eye(m, exact)) @ zf
        rhs = zf @ np.kron(ex.eye(m, exact), g)
        same = ex.array_equal(lhs, rhs) if exact else np.allclose(ex.to_float(lhs), ex.to_float(rhs), atol=1e-10)
        if not same:
            raise StructureError("symmetrized element fails (g (x) 1) z = z (1 (x) g)")
    return z


def _commutation_residual(zf, x, d, m, exact):
    """(x (x) 1_A (x) 1_B) z - z (1_B (x) x (x) 1_A) on the flattened element."""
    ia, ib = ex.eye(m, exact), ex.eye(d * m, exact)
    left = np.kron(np.kron(x, ia), ib)
    right = np.kron(ib, np.kron(x, ia))
    return left @ zf - zf @ right


def diagonal_structure(z, d, m=1):
    """Extract z_{l,k} in A (x) A with z = sum_{j,k,l} e_{j,k} (x) e_{l,j} (x) z_{l,k}.

    ``z`` lives in (M_d (x) A) (x) (M_d (x) A) with A = M_m.  Each z_{l,k} is
    returned in flattened form as an m^2 x m^2 matrix.  Raises
    :class:`StructureError` naming the first matrix unit that violates the
    commutation hypothesis, or if Delta(z) != 1.
    """
    zf = z.flatten() if isinstance(z, ElementaryTensorSum) else np.asarray(z)
    n = d * m
    if zf.shape != (n * n, n * n):
        raise InputError(f"element of shape {zf.shape} is not in (M_{d} (x) M_{m})^(x)2")
    exact = ex.is_exact(zf)

    def is_zero(a):
        return all(x == 0 for x in a.ravel()) if exact else bool(np.allclose(ex.to_float(a), 0, atol=1e-10))

    for (j, k), x in matrix_units(d, exact).items():
        if not is_zero(_commutation_residual(zf, x, d, m, exact)):
            raise StructureError(f"commutation fails for matrix unit e_{{{j},{k}}}")
    big_delta = delta_flat(zf, n)
    if not is_zero(big_delta - ex.eye(n, exact)):
        raise StructureError("Delta(z) != 1")

    # rows/cols of zf are indexed by (j, alpha, l, beta)
    t = zf.reshape(d, m, d, m, d, m, d, m)
    # a_{j,k,l,mm} = t[j, :, l, :, k, :, mm, :] viewed in A (x) A
    pieces = {}
    for l in range(d):
        for k in range(d):
            blk = t[0, :, l, :, k, :, 0, :]
            pieces[(l + 1, k + 1)] = blk.reshape(m * m, m * m)

    recon = ex.zeros(zf.shape, exact)
    for j in range(1, d + 1):
        for k in range(1, d + 1):
            for l in range(1, d + 1):
                outer = kron(matrix_unit(d, j, k, exact), ex.eye(m, exact))
                inner = kron(matrix_unit(d, l, j, exact), ex.eye(m, exact))
                recon = recon + _place(outer, inner, pieces[(l, k)], d, m)
    if not is_zero(recon - zf):
        raise StructureError("element is not of the form sum e_{j,k} (x) e_{l,j} (x) z_{l,k}")
    acc = ex.zeros((m, m), exact)
    for j in range(1, d + 1):
        acc = acc + delta_flat(pieces[(j, j)], m)
    if not is_zero(acc - ex.eye(m, exact)):
        raise StructureError("sum_j Delta_A(z_{j,j}) != 1_A")
    return pieces


def _place(x1, x2, a, d, m):
    """Embed x1 (x) x2 (x) a (factor-permuted) into (M_d (x) A) (x) (M_d (x) A).

    x1, x2 are (d m) x (d m) of the form e (x) 1_m; only their M_d part is used.
    """
    e1 = x1[::m, ::m]
    e2 = x2[::m, ::m]
    # order of factors in kron(e1, e2, a): (M_d, M_d, A, A) -> target (M_d, A, M_d, A)
    flat = kron(e1, e2, a)
    return permute_factors(flat, (d, d, m, m), (0, 2, 1, 3))
