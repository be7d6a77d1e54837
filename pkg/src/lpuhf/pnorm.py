"""Certified p->p operator norms of complex matrices on weighted atomic l^p spaces.

Every routine returns a :class:`NormInterval` ``[lower, upper]`` that contains
the true norm.  Closed forms are used whenever they exist (p in {1, 2, inf},
monomial matrices); otherwise a Boyd power iteration gives the lower bound and
Riesz-Thorin interpolation the upper bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core_spaces import INF, AtomicMeasure, as_exponent, dual_exponent, norming_functional, vector_norm
from .errors import InputError
from . import exact as ex

EXACT_P1 = "EXACT_P1"
EXACT_P2 = "EXACT_P2"
EXACT_PINF = "EXACT_PINF"
EXACT_MONOMIAL = "EXACT_MONOMIAL"
BOYD = "BOYD"
INTERP = "INTERP"
SANDWICH = "SANDWICH"

BOYD_TOL = 1e-12
BOYD_MAXITER = 10_000
BOYD_SEED = 0xC0FFEE
BOYD_RESTARTS = 8


@dataclass(frozen=True)
class NormInterval:
    lower: float
    upper: float
    witness: object = None
    methods: tuple = ()
    exact_value: Fraction | None = field(default=None, compare=False)
    # label of the block/index the witness lives in, for block-diagonal operators
    witness_index: object = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "lower", float(self.lower))
        object.__setattr__(self, "upper", float(self.upper))
        if not (0 <= self.lower <= self.upper):
            raise ValueError(f"invalid interval [{self.lower}, {self.upper}]")

    @property
    def width(self):
        return self.upper - self.lower

    @property
    def is_exact(self):
        return self.lower == self.upper

    def contains(self, x, tol=0.0):
        return self.lower - tol <= x <= self.upper + tol

    def to_json(self):
        wit = self.witness
        if wit is not None:
            wit = ex.matrix_to_json(np.atleast_2d(wit)) if np.ndim(wit) == 2 else [
                [float(z.real), float(z.imag)] for z in ex.to_float(np.asarray(wit)).ravel()]
        out = {"lower": self.lower, "upper": self.upper, "methods": list(self.methods), "witness": wit}
        if self.witness_index is not None:
            out["witness_index"] = str(self.witness_index)
        return out


def exact_interval(value, witness=None, methods=(), exact_value=None):
    v = float(value)
    return NormInterval(v, v, witness, tuple(methods), exact_value)


def interval_max(intervals):
    """Interval for the max of several quantities; witness from the largest lower (first on ties)."""
    intervals = list(intervals)
    best = max(range(len(intervals)), key=lambda i: (intervals[i].lower, -i))
    methods = tuple(dict.fromkeys(m for iv in intervals for m in iv.methods))
    return NormInterval(
        intervals[best].lower,
        max(iv.upper for iv in intervals),
        intervals[best].witness,
        methods,
    )


def interval_mul(a, b):
    ev = None
    if a.exact_value is not None and b.exact_value is not None:
        ev = a.exact_value * b.exact_value
    lo, hi = a.lower * b.lower, a.upper * b.upper
    if ev is not None:
        lo = hi = float(ev)
    return NormInterval(lo, max(lo, hi), None, tuple(dict.fromkeys(a.methods + b.methods)), ev)


def is_monomial(a):
    """At most one nonzero entry in every row and every column."""
    nz = np.asarray(a != 0) if not ex.is_exact(a) else np.vectorize(bool, otypes=[bool])(a)
    return bool((nz.sum(axis=0) <= 1).all() and (nz.sum(axis=1) <= 1).all())


def entry_modulus(x):
    if isinstance(x, (ex.QQi, Fraction, int)):
        try:
            return ex.exact_modulus(x)
        except ValueError:
            return abs(complex(x))
    return abs(complex(x))


def _scale_ratios(shape, p, dom, cod):
    """R[i, j] = (w_cod_i / w_dom_j)^(1/p), exactly 1 where the weights agree."""
    if (dom is None and cod is None) or p == INF:
        return None
    rows, cols = shape
    wc = cod.weights if cod is not None else (1,) * rows
    wd = dom.weights if dom is not None else (1,) * cols
    if len(wc) != rows or len(wd) != cols:
        raise InputError("measure sizes do not match matrix shape")
    if len(set(wc) | set(wd)) == 1:
        return None
    pf = float(p)
    out = np.empty(shape)
    for i in range(rows):
        for j in range(cols):
            out[i, j] = 1.0 if wc[i] == wd[j] else (float(wc[i]) / float(wd[j])) ** (1.0 / pf)
    return out


def _weight_vec(m, n, p):
    if m is None or p == INF:
        return np.ones(n)
    return m.array() ** (1.0 / float(p))


def _duality(y, p):
    """psi_p(y)_j = |y_j|^(p-1) sgn(y_j), normalized to unit dual norm."""
    a = np.abs(y)
    out = np.zeros_like(y)
    nz = a > 0
    if p == INF:
        j = int(np.argmax(a))
        out[j] = y[j] / a[j] if a[j] > 0 else 1.0
        return out
    pf = float(p)
    out[nz] = (a[nz] ** (pf - 1.0)) * y[nz] / a[nz]
    q = dual_exponent(p)
    n = vector_norm(out, q)
    return out / n if n > 0 else out


def _boyd_from(b, x, p):
    q = dual_exponent(p)
    x = x / vector_norm(x, p)
    best, best_x = vector_norm(b @ x, p), x
    prev = best
    for _ in range(BOYD_MAXITER):
        y = b @ x
        z = b.conj().T @ _duality(y, p)
        if not np.any(z):
            break
        x = _duality(z, q) if q != INF else z / np.abs(z).max()
        # _duality normalizes in the q-dual of q, i.e. the p norm
        x = x / vector_norm(x, p)
        est = vector_norm(b @ x, p)
        if est > best:
            best, best_x = est, x
        if abs(est - prev) <= BOYD_TOL * max(est, 1.0):
            break
        prev = est
    return best, best_x


def boyd_lower(b, p, upper=None, seed=BOYD_SEED):
    """Boyd fixed-point iteration from the uniform vector, restarted on stagnation."""
    n = b.shape[1]
    best, best_x = _boyd_from(b, np.ones(n, dtype=complex), p)
    if upper is not None and best < upper / 1.1:
        rng = np.random.default_rng(seed)
        for _ in range(BOYD_RESTARTS):
            x0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            val, x = _boyd_from(b, x0, p)
            if val > best:
                best, best_x = val, x
    return best, best_x


def _interp_upper(b, p):
    n1 = np.abs(b).sum(axis=0).max()
    ninf = np.abs(b).sum(axis=1).max()
    pf = float(p)
    return float(n1 ** (1.0 / pf) * ninf ** (1.0 - 1.0 / pf))


def opnorm(a, p, dom: AtomicMeasure | None = None, cod: AtomicMeasure | None = None, sandwich_upper=None):
    """Certified interval for the operator norm of ``a`` from l^p(dom) to l^p(cod).

    ``dom``/``cod`` default to equal weights (any constant weight gives the same
    p->p norm).  ``sandwich_upper`` is an extra caller-certified upper bound.
    """
    p = as_exponent(p)
    a = np.asarray(a)
    if a.ndim != 2:
        raise InputError("opnorm expects a 2-d matrix")
    rows, cols = a.shape
    ratios = _scale_ratios(a.shape, p, dom, cod)
    af = ex.to_float(a)
    b = af if ratios is None else af * ratios

    if is_monomial(a):
        best, arg, exact_val = 0.0, (0, 0), Fraction(0)
        for (i, j), x in np.ndenumerate(a):
            if x == 0:
                continue
            m = entry_modulus(x)
            val = float(m) * (1.0 if ratios is None else ratios[i, j])
            if val > best:
                best, arg = val, (i, j)
                exact_val = m if isinstance(m, Fraction) and (ratios is None or ratios[i, j] == 1.0) else None
        wit = np.zeros(cols, dtype=complex)
        wit[arg[1]] = 1.0
        return exact_interval(best, wit, (EXACT_MONOMIAL,), exact_val)

    if p == 1:
        colsum = np.abs(b).sum(axis=0)
        j = int(np.argmax(colsum))
        wit = np.zeros(cols, dtype=complex)
        wit[j] = 1.0
        return exact_interval(colsum[j], wit, (EXACT_P1,))

    if p == INF:
        rowsum = np.abs(af).sum(axis=1)
        i = int(np.argmax(rowsum))
        row = af[i]
        wit = np.where(np.abs(row) > 0, np.conj(row) / np.where(np.abs(row) > 0, np.abs(row), 1), 1.0)
        return exact_interval(rowsum[i], wit, (EXACT_PINF,))

    wd = _weight_vec(dom, cols, p)
    if p == 2:
        _, svals, vh = np.linalg.svd(b)
        x = vh[0].conj()
        lower = vector_norm(b @ x, 2) / vector_norm(x, 2)
        sigma = float(svals[0])
        upper = max(sigma * (1 + 1e-12), lower)
        lower = min(lower, sigma)
        return NormInterval(lower, upper, x / wd, (EXACT_P2,))

    upper = _interp_upper(b, p)
    methods = [BOYD, INTERP]
    if sandwich_upper is not None and sandwich_upper < upper:
        upper = float(sandwich_upper)
        methods.append(SANDWICH)
    lower, x = boyd_lower(b, p, upper)
    upper = max(upper, lower)
    return NormInterval(lower, upper, x / wd, tuple(methods))


def witness_ratio(a, x, p, dom=None, cod=None):
    """||a x|| / ||x|| in the weighted norms (what a witness reproduces)."""
    af = ex.to_float(np.asarray(a))
    x = np.asarray(x, dtype=complex)
    return vector_norm(af @ x, p, cod) / vector_norm(x, p, dom)


def conjugation_map_norm(s, p):
    """Norm of a -> s a s^{-1} acting on L(l^p); equals ||s|| ||s^{-1}||.

    The witness is a matrix ``a`` with ||a|| = 1 and ||s a s^{-1}|| reaching the
    lower bound: a matrix unit for diagonal ``s``, a rank-one operator otherwise.
    """
    p = as_exponent(p)
    s = np.asarray(s)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise InputError("conjugation_map_norm needs a square matrix")
    d = s.shape[0]
    try:
        sinv = ex.inv(s) if ex.is_exact(s) else np.linalg.inv(s)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise InputError("similarity is singular") from exc
    if not ex.is_exact(s) and np.linalg.cond(s) > 1e14:
        raise InputError("similarity is numerically singular")

    offdiag = s.copy()
    np.fill_diagonal(offdiag, 0)
    if not np.any(ex.to_float(offdiag)):
        mods = [entry_modulus(s[j, j]) for j in range(d)]
        if any(m == 0 for m in mods):
            raise InputError("similarity is singular")
        j = max(range(d), key=lambda t: (mods[t], -t))
        k = min(range(d), key=lambda t: (mods[t], t))
        val = mods[j] / mods[k]
        wit = np.zeros((d, d), dtype=complex)
        wit[j, k] = 1.0
        ev = val if isinstance(val, Fraction) else None
        return exact_interval(val, wit, (EXACT_MONOMIAL,), ev)

    ns, nsi = opnorm(s, p), opnorm(sinv, p)
    prod = interval_mul(ns, nsi)
    # rank-one witness a(xi) = omega(xi) eta, with omega norming s^{-1} mu
    eta = np.asarray(ns.witness, dtype=complex)
    eta = eta / vector_norm(eta, p)
    mu = np.asarray(nsi.witness, dtype=complex)
    mu = mu / vector_norm(mu, p)
    sinv_f = ex.to_float(sinv)
    if p == INF:
        t = sinv_f @ mu
        j = int(np.argmax(np.abs(t)))
        omega = np.zeros(d, dtype=complex)
        omega[j] = np.conj(t[j]) / abs(t[j])
    else:
        omega = norming_functional(sinv_f @ mu, p)
    wit = np.outer(eta, omega)
    return NormInterval(prod.lower, prod.upper, wit, prod.methods)
