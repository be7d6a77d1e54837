"""Constructive perturbation estimates.

Splitting diagonal similarities into scale, positive part and phase; turning a
diagonal system into a spatial representation conjugated by a block-diagonal
w; partial products of stage perturbations; sign selection and the resulting
lower bound for projective norms of diagonals; off-diagonal decay under block
compression; and the multiplicative defect T(xy) - T(x)T(y) of a linear map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.linalg

from . import exact as ex
from .core_spaces import as_exponent, norming_functional, pairing, vector_norm
from .errors import InputError, UnsupportedError
from .matalg import delta_flat, diagonal_structure, ElementaryTensorSum, matrix_unit, matrix_units
from .pnorm import entry_modulus, opnorm
from .simsys import SimilaritySystem, p_bound

NORM_TOL = 1e-12


def _is_diag(s):
    off = ex.to_float(s).copy()
    np.fill_diagonal(off, 0)
    return not np.any(off)


def _diag(values, exact):
    n = len(values)
    out = ex.zeros((n, n), exact)
    for j, v in enumerate(values):
        out[j, j] = v
    return out


# ---------------------------------------------------------------- splitting


@dataclass
class PhaseSplit:
    """s = beta * w * u with w positive diagonal (entries >= 1) and u unimodular diagonal."""

    beta: object
    w: np.ndarray
    u: np.ndarray
    R: object  # ||s|| ||s^{-1}|| = max |alpha| / min |alpha|


def phase_positive_split(s, p=2, check=True):
    """Split a diagonal invertible s; exact when every |alpha_j| is rational.

    With ``check`` the identities ||w|| = R, ||w - 1|| = R - 1, ||w^-1|| = 1 and
    ||w^-1 - 1|| = 1 - 1/R are verified to 1e-12.
    """
    s = np.asarray(s)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise InputError("expected a square matrix")
    if not _is_diag(s):
        raise UnsupportedError("phase_positive_split needs a diagonal matrix; use polar_split for p = 2")
    d = s.shape[0]
    alpha = [s[j, j] for j in range(d)]
    if any(a == 0 for a in alpha):
        raise InputError("similarity is singular")
    mods = [entry_modulus(a) for a in alpha]
    exact = ex.is_exact(s) and all(isinstance(m, Fraction) for m in mods)
    beta = min(mods)
    if exact:
        w = _diag([m / beta for m in mods], True)
        u = _diag([a / m for a, m in zip(alpha, mods)], True)
        prod = beta * w @ u
        if not ex.array_equal(prod, s):
            raise AssertionError("s != beta w u")
    else:
        af = ex.to_float(np.array(alpha, dtype=object) if ex.is_exact(s) else np.array(alpha))
        mf = np.abs(af)
        beta = float(mf.min())
        w = np.diag(mf / beta).astype(complex)
        u = np.diag(af / mf)
    R = max(mods) / min(mods)
    out = PhaseSplit(beta, w, u, R)
    if check:
        _check_w_norms(w, R, p)
    return out


def _w_norms(w, p):
    n = w.shape[0]
    one = ex.eye(n, ex.is_exact(w))
    winv = ex.inv(w) if ex.is_exact(w) else np.linalg.inv(w)
    return {
        "w": opnorm(w, p).upper,
        "w_minus_1": opnorm(w - one, p).upper,
        "w_inv": opnorm(winv, p).upper,
        "w_inv_minus_1": opnorm(winv - one, p).upper,
    }


def _expected_w_norms(R):
    R = float(R)
    return {"w": R, "w_minus_1": R - 1.0, "w_inv": 1.0, "w_inv_minus_1": 1.0 - 1.0 / R}


def _check_w_norms(w, R, p):
    got, want = _w_norms(w, p), _expected_w_norms(R)
    for k in want:
        if abs(got[k] - want[k]) > NORM_TOL * max(1.0, want[k]):
            raise AssertionError(f"||{k}|| = {got[k]}, expected {want[k]}")
    return got


def _inv(a):
    return ex.inv(a) if ex.is_exact(a) else np.linalg.inv(ex.to_float(a))


@dataclass
class Spatialization:
    """Blockwise data (label, beta_i, w_i, u_i) with rep(x) = w tau(x) w^{-1}, tau = (+)_i Ad(u_i)."""

    system: SimilaritySystem
    blocks: list
    norms: dict = field(default_factory=dict)
    residual: object = 0

    def __post_init__(self):
        self._u_inv = [_inv(b[3]) for b in self.blocks]
        self._w_inv = [_inv(b[2]) for b in self.blocks]

    def w(self):
        return _block_diag([b[2] for b in self.blocks])

    def w_inv(self):
        return _block_diag(self._w_inv)

    def tau_block(self, i, x):
        u, uinv = self.blocks[i][3], self._u_inv[i]
        if ex.is_exact(u) and ex.is_exact(x):
            return u @ x @ uinv
        return ex.to_float(u) @ ex.to_float(x) @ ex.to_float(uinv)

    def tau(self, x):
        x = np.asarray(x)
        return _block_diag([self.tau_block(i, x) for i in range(len(self.blocks))])

    def tau_table(self):
        """tau on every matrix unit, keyed by 1-based (j, k)."""
        exact = all(ex.is_exact(b[3]) for b in self.blocks)
        return {jk: self.tau(e) for jk, e in matrix_units(self.system.d, exact).items()}


def _block_diag(blocks):
    exact = all(ex.is_exact(b) for b in blocks)
    sizes = [b.shape[0] for b in blocks]
    n = sum(sizes)
    out = ex.zeros((n, n), exact)
    pos = 0
    for b, k in zip(blocks, sizes):
        out[pos:pos + k, pos:pos + k] = b if exact else ex.to_float(b)
        pos += k
    return out


def spatialize(S, p):
    """Write the representation of a diagonal system as w tau(.) w^{-1} with tau spatial.

    The residual max over matrix units and blocks of |s(i) x s(i)^{-1} -
    w_i u_i x u_i^{-1} w_i^{-1}| is exactly 0 when the system has exact
    entries with rational moduli.
    """
    p = as_exponent(p, allow_inf=False)
    if not S.diagonal:
        raise UnsupportedError("spatialize needs a diagonal system")
    blocks = []
    for lab, s in zip(S.labels, S.s):
        sp = phase_positive_split(s, p, check=False)
        blocks.append((lab, sp.beta, sp.w, sp.u))
    out = Spatialization(S, blocks)
    exact = S.exact and all(ex.is_exact(b[2]) and ex.is_exact(b[3]) for b in blocks)
    worst = Fraction(0) if exact else 0.0
    for x in matrix_units(S.d, exact).values():
        for i, (_, _, w, _) in enumerate(blocks):
            lhs = S.s[i] @ x @ S.inverses[i]
            rhs = w @ out.tau_block(i, x) @ out._w_inv[i]
            diff = lhs - rhs
            if exact:
                worst = max([worst] + [entry_modulus(z) for z in diff.ravel() if z != 0])
            else:
                worst = max(worst, float(np.abs(ex.to_float(diff)).max()))
    out.residual = worst
    R = p_bound(S, p)
    Rv = R.exact_value if R.exact_value is not None else R.lower
    # w is block diagonal with diagonal blocks, so every norm is a max over blocks
    out.norms = _check_w_norms(out.w(), Rv, p)
    out.norms["R"] = float(Rv)
    return out


def polar_split(s, check=True):
    """s = c u with c = (s s*)^{1/2} positive definite and u unitary (p = 2).

    If ||s^{-1}||_2 = 1 then ||c - 1||_2 <= ||s||_2 - 1 and ||c^{-1} - 1||_2 <= ||s||_2 - 1
    are asserted to 1e-9.
    """
    sf = ex.to_float(np.asarray(s))
    if sf.ndim != 2 or sf.shape[0] != sf.shape[1]:
        raise InputError("expected a square matrix")
    if np.linalg.cond(sf) > 1e14:
        raise InputError("polar_split of a singular matrix")
    u, c = scipy.linalg.polar(sf, side="left")
    if check:
        n = sf.shape[0]
        svals = np.linalg.svd(sf, compute_uv=False)
        norm_s, norm_sinv = svals[0], 1.0 / svals[-1]
        if abs(norm_sinv - 1.0) <= 1e-12:
            one = np.eye(n)
            for name, m in (("c - 1", c - one), ("c^-1 - 1", np.linalg.inv(c) - one)):
                val = np.linalg.norm(m, 2)
                if val > norm_s - 1 + 1e-9:
                    raise AssertionError(f"||{name}||_2 = {val} exceeds ||s||_2 - 1 = {norm_s - 1}")
    return c, u


# ---------------------------------------------------------------- partial products


@dataclass
class PartialProductReport:
    differences: list  # certified upper bounds for ||y_n - y_{n-1}||
    w_minus_1: list  # upper bounds for ||w_n - 1||
    M1: float
    M2: float
    per_stage_ok: list
    direct_checked: list

    @property
    def ok(self):
        return all(self.per_stage_ok)

    def to_json(self):
        return {"differences": self.differences, "w_minus_1": self.w_minus_1, "M1": self.M1, "M2": self.M2,
                "per_stage_ok": self.per_stage_ok}


def partial_products(w_list, p, direct_dim=64):
    """Diagnostics for y_n = w_1 (x) ... (x) w_n (x) 1 in the spatial tensor stages.

    ||y_n - y_{n-1}|| = prod_{k<n} ||w_k|| ||w_n - 1|| by the cross-norm
    property; when the stage dimension is at most ``direct_dim`` the
    difference is also formed explicitly and its certified lower bound compared.
    """
    p = as_exponent(p, allow_inf=False)
    w_list = [np.asarray(w) for w in w_list]
    norms_w, norms_winv, norms_wm1 = [], [], []
    for w in w_list:
        n = w.shape[0]
        winv = ex.inv(w) if ex.is_exact(w) else np.linalg.inv(ex.to_float(w))
        norms_w.append(opnorm(w, p).upper)
        norms_winv.append(opnorm(winv, p).upper)
        norms_wm1.append(opnorm(w - ex.eye(n, ex.is_exact(w)), p).upper)
    prods_w = np.cumprod([1.0] + norms_w)
    prods_winv = np.cumprod([1.0] + norms_winv)
    M1, M2 = float(prods_w.max()), float(prods_winv.max())
    diffs, ok, direct = [], [], []
    dims = [w.shape[0] for w in w_list]
    for k, w in enumerate(w_list):
        diff = float(prods_w[k] * norms_wm1[k])
        diffs.append(diff)
        good = diff <= M1 * norms_wm1[k] * (1 + 1e-12) + 1e-9
        if math.prod(dims[:k + 1]) <= direct_dim:
            left = np.eye(1, dtype=complex)
            for v in w_list[:k]:
                left = np.kron(left, ex.to_float(v))
            wf = ex.to_float(w)
            explicit = np.kron(left, wf) - np.kron(left, np.eye(w.shape[0]))
            lo = opnorm(explicit, p).lower
            good = good and lo <= M1 * norms_wm1[k] + 1e-9
            direct.append(True)
        else:
            direct.append(False)
        ok.append(bool(good))
    return PartialProductReport(diffs, [float(x) for x in norms_wm1], M1, M2, ok, direct)


# ---------------------------------------------------------------- sign selection

FIRST = "FIRST"
SECOND = "SECOND"


@dataclass
class SignChoice:
    zeta: list
    j0: int  # 0-based
    side: str
    achieved: float
    bound: float

    @property
    def ok(self):
        return self.achieved >= self.bound - 1e-9


def _sgn(z):
    return z / abs(z) if z != 0 else 1.0 + 0j


def _candidate(alpha, zeta, xi, j0, side, p):
    za = np.asarray(zeta) * alpha
    coef = za[j0] / za if side == FIRST else za / za[j0]
    return vector_norm(coef @ xi, p)


def sign_selection(alpha, xi, p):
    """Unimodular zeta and j0 with one of the two weighted sums of norm >= sqrt(gamma / beta).

    FIRST:  || sum_k (zeta_j0 alpha_j0) (zeta_k alpha_k)^-1 xi_k ||
    SECOND: || sum_k (zeta_j0 alpha_j0)^-1 (zeta_k alpha_k) xi_k ||
    ``xi`` is a (d, n) array of vectors in l^p_n; it is rescaled so that
    ||sum_j xi_j|| = 1.  FIRST is preferred when both candidates pass.
    """
    p = as_exponent(p, allow_inf=False)
    alpha = ex.to_float(np.asarray(alpha, dtype=object if any(isinstance(a, (Fraction, ex.QQi)) for a in alpha) else complex))
    if np.any(alpha == 0):
        raise InputError("sign_selection needs nonzero alpha")
    xi = ex.to_float(np.asarray(xi))
    if xi.ndim == 1:
        xi = xi[:, None]
    if xi.shape[0] != alpha.shape[0]:
        raise InputError("need one vector xi_j per alpha_j")
    total = xi.sum(axis=0)
    nt = vector_norm(total, p)
    if nt == 0:
        raise InputError("sum of the xi_j is zero")
    xi = xi / nt
    mods = np.abs(alpha)
    beta, gamma = float(mods.min()), float(mods.max())
    bound = math.sqrt(gamma / beta)
    omega = norming_functional(xi.sum(axis=0), p)
    sigma = np.array([np.conj(_sgn(pairing(omega, x))) for x in xi])
    strip = np.conj(alpha / mods)
    jmax, jmin = int(np.argmax(mods)), int(np.argmin(mods))
    cands = []
    for side, z0, j0 in ((FIRST, np.conj(sigma), jmax), (SECOND, sigma, jmin)):
        zeta = strip * z0
        cands.append(SignChoice(list(zeta), j0, side, _candidate(alpha, zeta, xi, j0, side, p), bound))
    for c in cands:
        if c.ok:
            return c
    return max(cands, key=lambda c: c.achieved)


def _apply_contraction(zf, n, g, ginv, left):
    """Delta((g (x) 1 (x) 1) z (g^-1 (x) 1 (x) 1)) (left) or with g on the second factor."""
    one = np.eye(n)
    G = np.kron(g, one) if left else np.kron(one, g)
    Gi = np.kron(ginv, one) if left else np.kron(one, ginv)
    return delta_flat(G @ zf @ Gi, n)


def diagonal_lower_bound(z, S, p, m=1, details=False):
    """Certified lower bound for the projective norm of z over M_d^{p,S} (x) M_m.

    For each index i, the sign choice for alpha = diag s(i) and
    xi_j = Delta_A(z_{j,j}) v (v a unit vector) fixes w = diag(zeta) s(i); the
    contraction Delta_1 (FIRST) or Delta_2 (SECOND) is contractive into the
    spatial algebra, so its spatial norm bounds ||z|| from below.
    """
    p = as_exponent(p, allow_inf=False)
    if not S.diagonal:
        raise UnsupportedError("diagonal_lower_bound needs a diagonal system")
    d = S.d
    pieces = diagonal_structure(z, d, m)
    zf = ex.to_float(z.flatten() if isinstance(z, ElementaryTensorSum) else np.asarray(z))
    n = d * m
    v = np.zeros(m, dtype=complex)
    v[0] = 1.0
    xi = np.array([ex.to_float(delta_flat(pieces[(j, j)], m)) @ v for j in range(1, d + 1)])
    rows = []
    for lab, alpha in zip(S.labels, S.diagonals):
        choice = sign_selection(list(alpha), xi, p)
        wd = np.asarray(choice.zeta) * ex.to_float(np.array(list(alpha), dtype=object))
        W = np.kron(np.diag(wd), np.eye(m))
        Wi = np.kron(np.diag(1.0 / wd), np.eye(m))
        contracted = _apply_contraction(zf, n, W, Wi, left=(choice.side == FIRST))
        lower = opnorm(contracted, p).lower
        rows.append({"label": lab, "side": choice.side, "j0": choice.j0, "achieved": choice.achieved,
                     "target": choice.bound, "lower": lower})
    best = max(r["lower"] for r in rows)
    return (best, rows) if details else best


# ---------------------------------------------------------------- block compression


def skewed_embedding(gamma, c=1.0, b=None):
    """phi(x) = V (1_2 (x) x) V^{-1} on M_2, V = 1 + (c / gamma) e_{1,2} (x) b.

    Returns (phi_table, M) with M = (1 + c ||b||)^2 a certified bound for ||phi||
    from the spatial norm on M_2 to the K_{2,gamma} norm on M_2 (x) M_2:
    ||V||, ||V^{-1}|| <= 1 + (c / gamma) gamma ||b|| and 1 (x) x has norm ||x||.
    ``b`` must be monomial with unimodular entries (default the swap).
    """
    if b is None:
        b = np.array([[0, 1], [1, 0]], dtype=complex)
    b = ex.to_float(np.asarray(b))
    nb = opnorm(b, 2).upper
    t = c / gamma
    E = np.kron(ex.to_float(matrix_unit(2, 1, 2)), b)
    V = np.eye(4) + t * E
    Vi = np.eye(4) - t * E  # E is nilpotent
    table = {jk: V @ np.kron(np.eye(2), ex.to_float(e)) @ Vi for jk, e in matrix_units(2).items()}
    return table, (1.0 + c * nb) ** 2


def _apply_table(table, x):
    out = None
    for (j, k), img in table.items():
        term = complex(x[j - 1, k - 1]) * img
        out = term if out is None else out + term
    return out


@dataclass
class CompressionReport:
    T_table: dict
    offdiag_max: float
    bound: float
    per_test: list

    @property
    def ok(self):
        return self.offdiag_max <= self.bound + 1e-9


def block_compression(phi_table, gamma, gamma0, M, p, d, tests=None, n_random=20, seed=0):
    """T(x) = sum_l (e_{l,l} (x) 1) phi(x) (e_{l,l} (x) 1) and the off-diagonal blocks of phi(x).

    ``M`` is a caller-certified bound for ||phi|| from the (p, gamma0) norm to
    the (p, gamma) norm.  Test elements are normalized to ||x||_p <= 1; the
    largest certified off-diagonal block norm is compared with M gamma0 / gamma.
    """
    p = as_exponent(p, allow_inf=False)
    keys = sorted(phi_table)
    d0 = max(j for j, _ in keys)
    size = np.asarray(phi_table[keys[0]]).shape[0]
    if size % d:
        raise InputError(f"image size {size} is not a multiple of d={d}")
    m = size // d
    proj = [np.kron(ex.to_float(matrix_unit(d, l, l)), np.eye(m)) for l in range(1, d + 1)]
    T_table = {jk: sum(P @ ex.to_float(img) @ P for P in proj) for jk, img in phi_table.items()}
    if tests is None:
        rng = np.random.default_rng(seed)
        tests = [ex.to_float(e) for e in matrix_units(d0).values()]
        tests += [rng.standard_normal((d0, d0)) + 1j * rng.standard_normal((d0, d0)) for _ in range(n_random)]
    per_test, worst = [], 0.0
    for x in tests:
        x = ex.to_float(np.asarray(x))
        nx = opnorm(x, p).upper
        if nx == 0:
            continue
        x = x / nx
        img = _apply_table(phi_table, x)
        blocks = img.reshape(d, m, d, m)
        vals = [opnorm(blocks[l, :, k, :], p).upper for l in range(d) for k in range(d) if l != k]
        top = max(vals) if vals else 0.0
        per_test.append(top)
        worst = max(worst, top)
    return CompressionReport(T_table, worst, M * gamma0 / gamma, per_test)


# ---------------------------------------------------------------- multiplicative defect


@dataclass
class DefectReport:
    defects: dict  # (i, j, k, l) -> T(e_ij e_kl) - T(e_ij) T(e_kl)
    estimate: float  # certified lower bound for ||T^v||
    T_norm_upper: float
    distance_upper_bound: float | None  # upper bound for d(T) from an exhibited homomorphism
    johnson_bound: float | None
    witness: tuple

    @property
    def holds(self):
        return self.johnson_bound is None or self.estimate <= self.johnson_bound + 1e-9


def multiplicative_defect(T_table, p=2, phi_table=None, eps=None, T_norm=None, target_norm=None,
                          domain_norm=None, n_random=100, seed=0):
    """T^v(x, y) = T(xy) - T(x) T(y) for T given on the matrix units of M_{d0}.

    ``target_norm`` / ``domain_norm`` map a matrix to a NormInterval (default:
    spatial p-norm).  ||T|| defaults to sum_{j,k} ||T(e_{j,k})||, valid because
    |x_{j,k}| <= ||x|| for the spatial norm and every larger norm.  eps
    defaults to the same bound for T - phi when ``phi_table`` is given.
    """
    p = as_exponent(p, allow_inf=False)
    tnorm = target_norm or (lambda a: opnorm(a, p))
    dnorm = domain_norm or (lambda a: opnorm(a, p))
    keys = sorted(T_table)
    d0 = max(j for j, _ in keys)
    units = {jk: ex.to_float(e) for jk, e in matrix_units(d0).items()}
    T_table = {jk: ex.to_float(np.asarray(v)) for jk, v in T_table.items()}

    def T(x):
        return _apply_table(T_table, x)

    defects = {}
    best, wit = 0.0, None
    for (i, j), x in units.items():
        for (k, l), y in units.items():
            dv = T(x @ y) - T_table[(i, j)] @ T_table[(k, l)]
            defects[(i, j, k, l)] = dv
            val = tnorm(dv).lower / (dnorm(x).upper * dnorm(y).upper)
            if val > best:
                best, wit = val, ((i, j), (k, l))
    rng = np.random.default_rng(seed)
    for t in range(n_random):
        x = rng.standard_normal((d0, d0)) + 1j * rng.standard_normal((d0, d0))
        y = rng.standard_normal((d0, d0)) + 1j * rng.standard_normal((d0, d0))
        dv = T(x @ y) - T(x) @ T(y)
        val = tnorm(dv).lower / (dnorm(x).upper * dnorm(y).upper)
        if val > best:
            best, wit = val, ("random", t)
    if T_norm is None:
        T_norm = math.fsum(tnorm(v).upper for v in T_table.values())
    if eps is None and phi_table is not None:
        eps = math.fsum(tnorm(T_table[jk] - ex.to_float(np.asarray(phi_table[jk]))).upper for jk in keys)
    jb = None if eps is None else (1 + eps + 2 * T_norm) * eps
    return DefectReport(defects, best, float(T_norm), eps, jb, wit)
