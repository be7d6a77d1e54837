"""Systems of d-similarities and the norms they induce on M_d (x) M_m.

A system S = (I, s, f) is a finite list of invertible d x d matrices s(i)
(one of them the identity) with probability weights f(i).  Its representation
is the block-diagonal map x -> (+)_i s(i) x s(i)^{-1} on l^p of the atoms
{1..d} x I weighted by f(i)/d.  Weights set the measure only; they never
enter a norm value.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import exact as ex
from .core_spaces import AtomicMeasure, as_exponent
from .errors import CapacityError, InputError, UnsupportedError
from .matalg import matrix_unit
from .pnorm import (
    EXACT_MONOMIAL,
    entry_modulus,
    is_monomial,
    SANDWICH,
    NormInterval,
    conjugation_map_norm,
    interval_max,
    opnorm,
)

DEFAULT_MAX_DIM = 4096


def max_dim():
    """Capacity cap on materialized dimensions (env LPUHF_MAX_DIM)."""
    try:
        return int(os.environ.get("LPUHF_MAX_DIM", DEFAULT_MAX_DIM))
    except ValueError:
        return DEFAULT_MAX_DIM


@dataclass
class SimilaritySystem:
    """Finite system of d-similarities.

    ``corner_family`` marks a system whose index set is the corner set of a
    box of diagonal matrices (the K_{d,gamma} family and tensor products of
    such); norms are then reported as enclosures of the norm of the whole box.
    """

    d: int
    labels: tuple
    s: tuple
    f: tuple
    diagonal: bool = False
    corner_family: bool = False
    name: str = ""

    def __post_init__(self):
        self.labels = tuple(self.labels)
        self.s = tuple(np.asarray(m) for m in self.s)
        self.f = tuple(self.f)
        if not (len(self.labels) == len(self.s) == len(self.f)):
            raise InputError("labels, matrices and weights differ in length")

    def __len__(self):
        return len(self.labels)

    @property
    def exact(self):
        return all(ex.is_exact(m) for m in self.s)

    @cached_property
    def inverses(self):
        out = []
        for m in self.s:
            try:
                out.append(ex.inv(m) if ex.is_exact(m) else np.linalg.inv(m))
            except (ValueError, np.linalg.LinAlgError) as exc:
                raise InputError("similarity system contains a singular matrix") from exc
        return tuple(out)

    @cached_property
    def diagonals(self):
        """Rows of diagonal entries (only meaningful for diagonal systems)."""
        return tuple(np.array([m[j, j] for j in range(self.d)], dtype=m.dtype) for m in self.s)

    def measure(self, m=1):
        """Atoms (j, alpha, label) of X_S (x) C^m with weights f(i)/d (times 1/m)."""
        atoms, weights = [], []
        for lab, fi in zip(self.labels, self.f):
            for j in range(self.d):
                for a in range(m):
                    atoms.append((j, a, lab))
                    weights.append(Fraction(fi) / (self.d * m) if isinstance(fi, (int, Fraction)) else fi / (self.d * m))
        return AtomicMeasure(tuple(atoms), tuple(weights))

    def with_weights(self, f):
        return SimilaritySystem(self.d, self.labels, self.s, tuple(f), self.diagonal, self.corner_family, self.name)


def basic_system(d):
    """The system {identity} with weight 1."""
    return SimilaritySystem(d, ("1",), (ex.eye(d, exact=True),), (Fraction(1),), True, True, f"basic_{d}")


def _is_identity(m, d):
    if ex.is_exact(m):
        return ex.array_equal(m, ex.eye(d, exact=True))
    return bool(np.allclose(ex.to_float(m), np.eye(d), rtol=0, atol=1e-12))


def _is_diagonal(m):
    off = ex.to_float(m).copy()
    np.fill_diagonal(off, 0)
    return not np.any(off)


def validate_system(S):
    """List of violation codes; empty means valid.

    DIM shape mismatch, ONE identity missing, INV singular matrix, POS
    nonpositive weight, SUM weights not summing to 1, DIAG diagonal flag
    contradicted.
    """
    out = []
    if S.d < 1 or any(np.shape(m) != (S.d, S.d) for m in S.s):
        return ["DIM"]
    if not any(_is_identity(m, S.d) for m in S.s):
        out.append("ONE")
    for m in S.s:
        if ex.is_exact(m):
            try:
                ex.inv(m)
            except ValueError:
                out.append("INV")
                break
        elif not np.isfinite(np.linalg.cond(ex.to_float(m))) or np.linalg.cond(ex.to_float(m)) > 1e14:
            out.append("INV")
            break
    if any(not fi > 0 for fi in S.f):
        out.append("POS")
    total = sum(S.f) if all(isinstance(x, (int, Fraction)) for x in S.f) else math.fsum(float(x) for x in S.f)
    if abs(float(total) - 1.0) > 1e-12:
        out.append("SUM")
    if S.diagonal and not all(_is_diagonal(m) for m in S.s):
        out.append("DIAG")
    return out


def require_valid(S):
    bad = validate_system(S)
    if bad:
        raise InputError(f"invalid similarity system: {', '.join(bad)}")
    return S


def p_bound(S, p):
    """R_{p,S} = max_i ||s(i)|| ||s(i)^{-1}||; exact for diagonal systems."""
    p = as_exponent(p)
    ivs = [conjugation_map_norm(m, p) for m in S.s]
    best = interval_max(ivs)
    exact_vals = [iv.exact_value for iv in ivs]
    ev = max(exact_vals) if all(v is not None for v in exact_vals) else None
    return NormInterval(best.lower, best.upper, best.witness, best.methods, ev)


def _conj(S, i, x, m):
    """(s(i) (x) 1_m) x (s(i)^{-1} (x) 1_m)."""
    exact = ex.is_exact(x) and ex.is_exact(S.s[i])
    if S.diagonal:
        alpha = S.diagonals[i]
        if exact:
            ratio = np.array([[alpha[a // m] / alpha[b // m] for b in range(S.d * m)] for a in range(S.d * m)],
                             dtype=object)
            return x * ratio
        af = ex.to_float(alpha)
        rows = np.repeat(af, m)
        return ex.to_float(x) * (rows[:, None] / rows[None, :])
    s, sinv = S.s[i], S.inverses[i]
    if m > 1:
        s, sinv = np.kron(s, ex.eye(m, ex.is_exact(s))), np.kron(sinv, ex.eye(m, ex.is_exact(sinv)))
    if exact:
        return s @ x @ sinv
    return ex.to_float(s) @ ex.to_float(x) @ ex.to_float(sinv)


def rep_matrix(S, x, p=None):
    """Block-diagonal image of x under the representation: block i is s(i) x s(i)^{-1}.

    ``p`` is accepted for symmetry with the norm routines; the matrix does not
    depend on it.
    """
    x = np.asarray(x)
    m = x.shape[0] // S.d
    if x.shape != (S.d * m, S.d * m):
        raise InputError(f"element of shape {x.shape} is not in M_{S.d} (x) M_m")
    blocks = [_conj(S, i, x, m) for i in range(len(S))]
    n = S.d * m
    exact = all(ex.is_exact(b) for b in blocks)
    out = ex.zeros((n * len(blocks), n * len(blocks)), exact)
    for i, b in enumerate(blocks):
        out[i * n:(i + 1) * n, i * n:(i + 1) * n] = b
    return out


def _block_monomial(x, d, m):
    """True if at most one nonzero m x m block per block-row and block-column."""
    xf = ex.to_float(np.asarray(x))
    nz = np.abs(xf.reshape(d, m, d, m)).sum(axis=(1, 3)) > 0
    return bool((nz.sum(axis=0) <= 1).all() and (nz.sum(axis=1) <= 1).all())


def _block_norms(x, d, m, p):
    xf = np.asarray(x)
    return {(a, b): opnorm(xf[a * m:(a + 1) * m, b * m:(b + 1) * m], p)
            for a in range(d) for b in range(d)}


def _monomial_norm(S, x, m):
    """Diagonal system, monomial x: max over nonzero x_ab of |x_ab| max_i |alpha_i(a)/alpha_i(b)|.

    Conjugating by a diagonal matrix keeps x monomial, so every block norm is
    its largest entry modulus (for any p); this avoids one opnorm per index.
    """
    mods = [[entry_modulus(a) for a in alpha] for alpha in S.diagonals]
    best, arg, label, ev = 0.0, None, S.labels[0], Fraction(0)
    for (a, b), v in np.ndenumerate(x):
        if v == 0:
            continue
        ja, jb = a // m, b // m
        xv = entry_modulus(v)
        for i, row in enumerate(mods):
            val = xv * row[ja] / row[jb]
            if float(val) > best:
                best, arg, label = float(val), b, S.labels[i]
                ev = val if isinstance(val, Fraction) else None
    wit = np.zeros(x.shape[1], dtype=complex)
    wit[arg if arg is not None else 0] = 1.0
    return NormInterval(best, best, wit, (EXACT_MONOMIAL,), ev, label)


def norm_pS(S, x, p, m=None):
    """Norm of x in M_d^{p,S} (x) M_m^p: sup_i ||(s(i) (x) 1) x (s(i)^{-1} (x) 1)||_p.

    For corner-family systems the finite sup is a lower bound for the norm of
    the full box; the upper end then comes from the sandwich ||x|| <= R ||x||_p
    and from the block expansion sum_{a,b} r_{a,b} ||x_{a,b}||, and is exact
    when x is block-monomial.
    """
    p = as_exponent(p, allow_inf=False)
    x = np.asarray(x)
    if m is None:
        m = x.shape[0] // S.d
    if x.shape != (S.d * m, S.d * m):
        raise InputError(f"element of shape {x.shape} is not in M_{S.d} (x) M_{m}")
    if S.diagonal and is_monomial(x):
        return _monomial_norm(S, x, m)
    ivs = [opnorm(_conj(S, i, x, m), p) for i in range(len(S))]
    best = max(range(len(ivs)), key=lambda i: (ivs[i].lower, -i))
    out = interval_max(ivs)
    out = NormInterval(out.lower, out.upper, out.witness, out.methods,
                       ivs[best].exact_value if all(iv.is_exact for iv in ivs) else None,
                       S.labels[best])
    if not S.corner_family or not S.diagonal or len(S) == 1 or _block_monomial(x, S.d, m):
        return out
    # non-monomial element of a box family: enclose the continuum sup
    spatial = opnorm(x, p).upper
    slack = p_bound(S, p).upper
    r = r_table(S, check=False)
    bn = _block_norms(x, S.d, m, p)
    expansion = max(bn[(a, a)].upper for a in range(S.d)) + sum(
        r[a, b] * bn[(a, b)].upper for a in range(S.d) for b in range(S.d) if a != b)
    upper = max(out.upper, min(slack * spatial, expansion))
    return NormInterval(out.lower, upper, out.witness, out.methods + (SANDWICH,), None, out.witness_index)


@dataclass(frozen=True)
class RTable:
    """Grid r_{j,k} of matrix-unit norms; ``values`` is 0-based, :meth:`at` is 1-based."""

    values: np.ndarray

    def __getitem__(self, idx):
        return self.values[idx]

    @property
    def d(self):
        return self.values.shape[0]

    def at(self, j, k):
        return float(self.values[j - 1, k - 1])


def r_table(S, check=True, p=2):
    """r_{j,k} = max_i |alpha_{i,j}| / |alpha_{i,k}| for a diagonal system.

    With ``check`` the norm of every matrix unit is recomputed and compared
    against the table (tolerance 1e-9).
    """
    if not S.diagonal:
        raise UnsupportedError("r_table is defined for diagonal systems only")
    d = S.d
    out = np.zeros((d, d))
    for alpha in S.diagonals:
        mods = [float(abs(a)) for a in alpha]
        for j in range(d):
            for k in range(d):
                out[j, k] = max(out[j, k], mods[j] / mods[k])
    if check:
        for j in range(d):
            for k in range(d):
                iv = norm_pS(S, matrix_unit(d, j + 1, k + 1), p)
                if max(abs(iv.lower - out[j, k]), abs(iv.upper - out[j, k])) > 1e-9 * out[j, k]:
                    raise AssertionError(f"norm of e_{j + 1},{k + 1} is {iv}, table says {out[j, k]}")
    return RTable(out)


def _label(a, b):
    ta = a if isinstance(a, tuple) else (a,)
    tb = b if isinstance(b, tuple) else (b,)
    return ta + tb


def tensor_systems(S1, S2):
    """Index I1 x I2, s(i1, i2) = s1(i1) (x) s2(i2), f(i1, i2) = f1(i1) f2(i2)."""
    labels, mats, weights = [], [], []
    for (l1, s1, f1), (l2, s2, f2) in itertools.product(zip(S1.labels, S1.s, S1.f), zip(S2.labels, S2.s, S2.f)):
        labels.append(_label(l1, l2))
        mats.append(np.kron(s1, s2))
        weights.append(f1 * f2)
    d = S1.d * S2.d
    if d > max_dim():
        raise CapacityError(f"tensor system of dimension {d} exceeds cap {max_dim()}")
    return SimilaritySystem(d, tuple(labels), tuple(mats), tuple(weights),
                            S1.diagonal and S2.diagonal, S1.corner_family and S2.corner_family,
                            f"{S1.name}(x){S2.name}")


def gamma_corner_system(d, gamma):
    """Diagonal system on the corners {1, gamma}^d of K_{d,gamma}, uniform weights.

    Matrix units and block-diagonal elements get the exact K_{d,gamma} norm;
    other elements get an enclosure (see :func:`norm_pS`).
    """
    if isinstance(gamma, str):
        gamma = Fraction(gamma)
    if not gamma >= 1:
        raise InputError(f"gamma must be >= 1, got {gamma}")
    if gamma == 1:
        S = basic_system(d)
        S.name = f"K_{d},1"
        return S
    if 2 ** d > max_dim():
        raise CapacityError(f"K_{{{d},gamma}} has 2^{d} corners, above cap {max_dim()}")
    exact = isinstance(gamma, (int, Fraction))
    g = Fraction(gamma) if exact else float(gamma)
    one = Fraction(1) if exact else 1.0
    labels, mats = [], []
    for bits in itertools.product((0, 1), repeat=d):
        m = ex.zeros((d, d), exact)
        for j, b in enumerate(bits):
            m[j, j] = g if b else one
        labels.append(bits)
        mats.append(m)
    w = Fraction(1, 2 ** d)
    return SimilaritySystem(d, tuple(labels), tuple(mats), (w,) * len(mats), True, True, f"K_{d},{gamma}")


def subsystem_restrict(S, keep, test_elements=(), p=2):
    """Restrict to the labels in ``keep`` and renormalize weights.

    Each supplied test element is checked to have norm no larger under the
    restricted system (the restriction map is contractive).
    """
    keep = list(keep)
    if not keep:
        raise InputError("subsystem needs at least one index")
    idx = []
    for lab in keep:
        if lab not in S.labels:
            raise InputError(f"unknown index label {lab!r}")
        idx.append(S.labels.index(lab))
    mats = tuple(S.s[i] for i in idx)
    if not any(_is_identity(m, S.d) for m in mats):
        raise InputError("subsystem must contain the identity")
    fs = [S.f[i] for i in idx]
    total = sum(fs) if all(isinstance(x, (int, Fraction)) for x in fs) else math.fsum(float(x) for x in fs)
    T = SimilaritySystem(S.d, tuple(S.labels[i] for i in idx), mats, tuple(x / total for x in fs),
                         S.diagonal, False, f"{S.name}|sub")
    for x in test_elements:
        small, big = norm_pS(T, x, p), norm_pS(S, x, p)
        if small.lower > big.upper + 1e-9 or small.lower > big.lower + 1e-9:
            raise AssertionError(f"restriction increased a norm: {small} vs {big}")
    return T


def corner_lower(d, gammas, x, p):
    """max over the corners of every box [1, g]^d for g in gammas of ||v x v^{-1}||_p."""
    ivs = []
    for g in gammas:
        S = gamma_corner_system(d, g)
        ivs.extend(opnorm(_conj(S, i, np.asarray(x), np.asarray(x).shape[0] // d), p) for i in range(len(S)))
    return max(iv.lower for iv in ivs)


def norm_monotonicity_check(d, beta, gamma, x, p):
    """Check ||x||_{p,beta} <= ||x||_{p,gamma} + 1e-9 on certified corner lower bounds.

    The corners of K_{d,beta} lie in K_{d,gamma}, so the gamma side is
    evaluated on both corner sets.
    """
    if not 1 <= beta <= gamma:
        raise InputError("need 1 <= beta <= gamma")
    lo_beta = corner_lower(d, [beta], x, p)
    lo_gamma = corner_lower(d, [gamma, beta], x, p)
    return lo_beta <= lo_gamma + 1e-9


# ---------------------------------------------------------------- JSON


def system_from_json(obj):
    """Parse the system JSON format (or a {"family": "gamma_corner", ...} shortcut)."""
    if not isinstance(obj, dict):
        raise InputError("system JSON must be an object")
    if "family" in obj:
        if obj["family"] != "gamma_corner":
            raise InputError(f"unknown system family {obj['family']!r}")
        try:
            d = int(obj["d"])
            gamma = ex.parse_rational(obj["gamma"])
        except (KeyError, ValueError, TypeError) as exc:
            raise InputError(f"bad gamma_corner system: {exc}") from exc
        return gamma_corner_system(d, gamma)
    try:
        d = int(obj["d"])
        if d > max_dim():
            raise CapacityError(f"d={d} exceeds cap {max_dim()}")
        entries = obj["index"]
        labels = tuple(str(e["label"]) for e in entries)
        mats = tuple(ex.matrix_from_json(e["s"]) for e in entries)
        weights = tuple(ex.parse_rational(e["f"]) for e in entries)
        diagonal = bool(obj.get("diagonal", False))
    except CapacityError:
        raise
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"malformed system JSON: {exc}") from exc
    S = SimilaritySystem(d, labels, mats, weights, diagonal)
    return require_valid(S)


def system_to_json(S):
    def num(x):
        return f"{x.numerator}/{x.denominator}" if isinstance(x, Fraction) else float(x)

    return {
        "d": S.d,
        "diagonal": S.diagonal,
        "index": [
            {"label": "|".join(map(str, lab)) if isinstance(lab, tuple) else str(lab), "f": num(f),
             "s": ex.matrix_to_json(m)}
            for lab, f, m in zip(S.labels, S.f, S.s)
        ],
    }


_UNIT_PHASES = (
    ex.QQi(1, 0), ex.QQi(0, 1), ex.QQi(Fraction(3, 5), Fraction(4, 5)),
    ex.QQi(Fraction(5, 13), Fraction(12, 13)), ex.QQi(Fraction(8, 17), Fraction(15, 17)),
)


def random_diagonal_system(rng, d, n_index, max_ratio=9, complex_phases=True):
    """Random exact diagonal system: index 0 is the identity, other entries are
    rationals k/l (1 <= k, l <= max_ratio) times a Gaussian-rational unit phase."""
    labels = ["1"] + [f"s{i}" for i in range(1, n_index)]
    mats = [ex.eye(d, exact=True)]
    for _ in range(1, n_index):
        m = ex.zeros((d, d), exact=True)
        for j in range(d):
            mod = Fraction(int(rng.integers(1, max_ratio + 1)), int(rng.integers(1, max_ratio + 1)))
            if complex_phases:
                ph = _UNIT_PHASES[int(rng.integers(len(_UNIT_PHASES)))]
                if rng.integers(2):
                    ph = ph.conjugate()
                if rng.integers(2):
                    ph = -ph
                val = ph * mod
                m[j, j] = val.re if val.im == 0 else val
            else:
                m[j, j] = mod * (1 if rng.integers(2) else -1)
        mats.append(m)
    raw = [int(rng.integers(1, 10)) for _ in range(n_index)]
    weights = tuple(Fraction(r, sum(raw)) for r in raw)
    return SimilaritySystem(d, tuple(labels), tuple(mats), weights, True, False, f"random_{d}x{n_index}")
