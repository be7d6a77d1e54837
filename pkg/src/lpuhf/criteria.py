"""Finite-stage diagnostics separating spatial from non-amenable stage sequences.

* :func:`series_report` tabulates R_{p,S_n} - 1 with partial sums and
  products, and gives a verdict only for registered closed-form families.
* :func:`sum_product_consistency` checks the two-sided comparison between
  sum beta_n and log prod (1 + beta_n).
* :func:`flip_witness` builds the involution v_n = r y_r (r = r_d(n)) in the
  doubled stage and computes its norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import exact as ex
from .core_spaces import as_exponent
from .errors import InputError, UnsupportedError
from .matalg import flip_element, matrix_unit, permute_factors
from .pnorm import NormInterval, exact_interval
from .simsys import norm_pS, p_bound, tensor_systems
from .tensor_type import FamilyRecipe, StageSpec, combined_system, r_d, sigma_embed

CONVERGENT_SPATIAL = "CONVERGENT_SPATIAL"
DIVERGENT_NONAMENABLE = "DIVERGENT_NONAMENABLE"
UNDETERMINED = "UNDETERMINED"


@dataclass
class SeriesReport:
    terms: list
    partial_sums: list
    partial_products: list
    verdict: str
    verdict_basis: str
    family: dict | None = None

    def __post_init__(self):
        if any(t < 0 for t in self.terms):
            raise ValueError("series terms must be nonnegative")

    def to_json(self):
        return {
            "family": self.family,
            "terms": [float(t) for t in self.terms],
            "partial_sums": [float(t) for t in self.partial_sums],
            "partial_products": [float(t) for t in self.partial_products],
            "verdict": self.verdict,
            "verdict_basis": self.verdict_basis,
        }


def family_verdict(recipe):
    """Closed-form rule for sum_n (gamma(n) - 1) < infinity; returns (verdict, basis)."""
    c = recipe.params["c"]
    kind = recipe.kind
    if kind == "constant":
        conv = c == 1
        basis = "constant gamma: terms vanish iff gamma = 1"
    elif c == 0:
        conv, basis = True, f"{kind} family with c = 0: all terms vanish"
    elif kind == "power":
        conv = recipe.params["a"] > 1
        basis = "p-series: sum c n^-a converges iff a > 1"
    elif kind == "geometric":
        conv = recipe.params["q"] < 1
        basis = "geometric series: sum c q^n converges iff q < 1"
    else:
        conv = recipe.params["a"] > 1
        basis = "Bertrand series: sum c / (n log(n+1)^a) converges iff a > 1"
    return (CONVERGENT_SPATIAL if conv else DIVERGENT_NONAMENABLE), basis


def series_report(source, p, N):
    """R_{p,S_n} - 1 for n = 1..N.

    ``source`` is a :class:`FamilyRecipe` (verdict from its closed form) or a
    :class:`StageSpec` / sequence of systems (verdict UNDETERMINED).
    """
    p = as_exponent(p, allow_inf=False)
    if isinstance(source, FamilyRecipe):
        systems = [source.system(n) for n in range(1, N + 1)]
        verdict, basis = family_verdict(source)
        fam = source.to_json()
    else:
        systems = list(source.systems if isinstance(source, StageSpec) else source)[:N]
        verdict, basis, fam = UNDETERMINED, "finite prefix only", None
    bounds = []
    for S in systems:
        iv = p_bound(S, p)
        bounds.append(iv.exact_value if iv.exact_value is not None else iv.lower)
    terms = [b - 1 for b in bounds]
    sums, prods = [], []
    s, q = 0.0, 1.0
    for t, b in zip(terms, bounds):
        s += float(t)
        q *= float(b)
        sums.append(s)
        prods.append(q)
    return SeriesReport([float(t) for t in terms], sums, prods, verdict, basis, fam)


def sum_product_consistency(alphas, N=None, tol=1e-9):
    """Check M^-1 log(M+1) beta <= log(1+beta) <= beta termwise and on every prefix.

    beta_n = alpha_n - 1, M = max beta_n (factor 1 when M = 0); the prefix form
    compares log prod alpha_n with sum beta_n.  Everything runs in log space.
    """
    alphas = list(alphas)[:N] if N is not None else list(alphas)
    if any(a < 1 for a in alphas):
        raise InputError("every alpha_n must be >= 1")
    betas = [float(a - 1) if isinstance(a, Fraction) else float(a) - 1.0 for a in alphas]
    if not betas:
        return True
    M = max(betas)
    factor = 1.0 if M == 0 else math.log1p(M) / M
    logs = [math.log1p(b) for b in betas]
    for b, lb in zip(betas, logs):
        if not (factor * b <= lb + tol * max(1.0, lb) and lb <= b + tol * max(1.0, b)):
            return False
    s_beta, s_log = 0.0, 0.0
    for b, lb in zip(betas, logs):
        s_beta += b
        s_log += lb
        if s_log > s_beta + tol * max(1.0, s_beta):
            return False
        if s_log < factor * s_beta - tol * max(1.0, s_beta):
            return False
    return True


# ---------------------------------------------------------------- flips


@dataclass
class FlipWitness:
    n: int
    v: np.ndarray
    norm: NormInterval
    involution: bool = field(default=True)

    def to_json(self):
        return {"n": self.n, "dim": int(self.v.shape[0]), "norm": self.norm.to_json(), "involution": self.involution}


def doubled_system(spec, n):
    """The stage-n combined system tensored with itself."""
    T = combined_system(spec, 0, n)
    return tensor_systems(T, T)


def _interleave_order(k):
    """Factor order taking (1..k, 1'..k') to (1, 1', 2, 2', ...)."""
    return [t for j in range(k) for t in (j, k + j)]


def flip_witness(spec, n):
    """v = r y_r on C^r (x) C^r, r = r_d(n), with its norm in the doubled stage.

    v is the tensor swap, hence an exact involution.  After interleaving the
    stage factors it must equal the tensor product of the per-stage swaps.
    """
    r = r_d(spec, n)
    v = flip_element(r, exact=True) * r
    vv = v @ v
    inv_ok = ex.array_equal(vv, ex.eye(r * r, exact=True))
    if not inv_ok:
        raise AssertionError("flip witness is not an involution")
    if n == 0:
        return FlipWitness(0, v, exact_interval(1, np.ones(1, dtype=complex), (), Fraction(1)))
    dims = spec.dims[:n]
    perm = permute_factors(v, dims + dims, _interleave_order(n))
    per_stage = np.array([[Fraction(1)]], dtype=object)
    for d in dims:
        per_stage = np.kron(per_stage, flip_element(d, exact=True) * d)
    if not ex.array_equal(perm, per_stage):
        raise AssertionError("interleaved flip witness differs from the product of stage flips")
    D = doubled_system(spec, n)
    return FlipWitness(n, v, norm_pS(D, v, spec.p, m=1), inv_ok)


def flip_conjugation_residual(spec, m, n, a, b):
    """Norm of v_n (sigma(a) (x) sigma(b)) v_n^{-1} - sigma(b) (x) sigma(a) in the doubled stage."""
    sa, sb = sigma_embed(a, spec, m, n), sigma_embed(b, spec, m, n)
    r = r_d(spec, n)
    exact = ex.is_exact(sa) and ex.is_exact(sb)
    v = flip_element(r, exact=exact) * r
    lhs = v @ np.kron(sa, sb) @ v
    diff = lhs - np.kron(sb, sa)
    if exact:
        if all(z == 0 for z in diff.ravel()):
            return 0.0
    elif not np.any(diff):
        return 0.0
    return norm_pS(doubled_system(spec, n), diff, spec.p, m=1).upper


def rho_norm(S, p):
    """Norm of the identity map M_d^p -> M_d^{p,S}: max over matrix units (diagonal S)."""
    if not S.diagonal:
        raise UnsupportedError("rho_norm is implemented for diagonal systems")
    vals = [norm_pS(S, matrix_unit(S.d, j, k), p) for j in range(1, S.d + 1) for k in range(1, S.d + 1)]
    best = max(vals, key=lambda iv: iv.lower)
    return best


def rho_tensor_norm(S, p, check=True):
    """||rho (x) rho|| = ||rho||^2 = R_{p,S}^2 for diagonal S.

    With ``check`` (and d <= 3) the value is compared against the p-bound of
    S (x) S.
    """
    if not S.diagonal:
        raise UnsupportedError("rho_tensor_norm needs a diagonal system")
    R = p_bound(S, p)
    ev = R.exact_value * R.exact_value if R.exact_value is not None else None
    out = NormInterval(R.lower ** 2, R.upper ** 2, None, R.methods, ev)
    if ev is not None:
        out = exact_interval(ev, None, R.methods, ev)
    if check and S.d <= 3:
        T = p_bound(tensor_systems(S, S), p)
        if ev is not None and T.exact_value is not None:
            if T.exact_value != ev:
                raise AssertionError(f"p-bound of S (x) S is {T.exact_value}, expected {ev}")
        elif abs(T.lower - out.lower) > 1e-9 * max(1.0, out.lower):
            raise AssertionError(f"p-bound of S (x) S is {T}, expected {out}")
    return out
