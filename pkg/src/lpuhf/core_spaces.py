"""Finite atomic measure spaces, weighted l^p norms and norming functionals.

Vectors are 1-d numpy arrays indexed by the atoms of an :class:`AtomicMeasure`.
Exponents are exact ``Fraction`` values when supplied as ints or ``"n/d"``
strings, plain floats otherwise, and ``INF`` (``math.inf``) for the sup norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InputError
from .exact import to_float

INF = math.inf


def as_exponent(p, allow_inf=True):
    """Normalize an exponent; ints and rational strings become ``Fraction``."""
    if isinstance(p, str):
        s = p.strip().lower()
        if s in ("inf", "infinity", "oo"):
            p = INF
        else:
            try:
                p = Fraction(s)
            except ValueError as exc:
                raise InputError(f"cannot parse exponent {p!r}") from exc
    elif isinstance(p, bool):
        raise InputError("exponent must be a number")
    elif isinstance(p, (int, np.integer)):
        p = Fraction(int(p))
    elif isinstance(p, Fraction):
        pass
    else:
        p = float(p)
    if p == INF:
        if not allow_inf:
            raise InputError("p = inf is not allowed here; algebras need p in [1, inf)")
        return INF
    if not p >= 1:
        raise InputError(f"exponent must satisfy p >= 1, got {p}")
    return p


def finite_exponent(p):
    return as_exponent(p, allow_inf=False)


def dual_exponent(p):
    """Conjugate exponent q with 1/p + 1/q = 1."""
    p = as_exponent(p)
    if p == INF:
        return Fraction(1)
    if p == 1:
        return INF
    if isinstance(p, Fraction):
        return p / (p - 1)
    return p / (p - 1.0)


@dataclass(frozen=True)
class AtomicMeasure:
    """Finitely many labelled atoms with positive weights."""

    atoms: tuple
    weights: tuple

    def __post_init__(self):
        if len(self.atoms) != len(self.weights):
            raise InputError("atoms and weights differ in length")
        if len(set(self.atoms)) != len(self.atoms):
            raise InputError("atom labels must be distinct")
        if any(not w > 0 for w in self.weights):
            raise InputError("atom weights must be positive")

    @classmethod
    def counting(cls, d):
        return cls(tuple(range(d)), (1,) * d)

    @classmethod
    def normalized_counting(cls, d):
        return cls(tuple(range(d)), (Fraction(1, d),) * d)

    @classmethod
    def from_weights(cls, weights, atoms=None):
        weights = tuple(weights)
        return cls(tuple(range(len(weights))) if atoms is None else tuple(atoms), weights)

    def __len__(self):
        return len(self.atoms)

    @property
    def normalized(self):
        return abs(float(sum(self.weights)) - 1.0) <= 1e-12

    def array(self):
        return np.array([float(w) for w in self.weights])

    def index(self, atom):
        return self.atoms.index(atom)


def _weights(v, m):
    if m is None:
        return np.ones(len(v))
    if len(m) != len(v):
        raise InputError(f"vector of length {len(v)} does not match measure with {len(m)} atoms")
    return m.array()


def vector_norm(v, p, m=None):
    """Weighted l^p norm; ``m=None`` means unit weights (counting measure)."""
    v = to_float(np.asarray(v)).ravel()
    p = as_exponent(p)
    w = _weights(v, m)
    a = np.abs(v)
    if p == INF:
        return float(a.max()) if a.size else 0.0
    pf = float(p)
    if pf == 1.0:
        return float(np.dot(w, a))
    top = a.max() if a.size else 0.0
    if top == 0:
        return 0.0
    # scale first so large p does not overflow
    return float(top * np.dot(w, (a / top) ** pf) ** (1.0 / pf))


def pairing(omega, v, m=None):
    """Weighted bilinear pairing sum_j w_j omega_j v_j."""
    omega = to_float(np.asarray(omega)).ravel()
    v = to_float(np.asarray(v)).ravel()
    return complex(np.dot(_weights(v, m) * omega, v))


def norming_functional(v, p, m=None):
    """Dual vector omega with <omega, v> = ||v||_p and ||omega||_{p'} = 1."""
    v = to_float(np.asarray(v)).ravel()
    p = finite_exponent(p)
    _weights(v, m)
    nv = vector_norm(v, p, m)
    if nv == 0:
        raise InputError("norming functional of the zero vector is undefined")
    a = np.abs(v)
    phase = np.ones_like(v)
    nz = a > 0
    phase[nz] = np.conj(v[nz]) / a[nz]
    pf = float(p)
    if pf == 1.0:
        return np.where(nz, phase, 0)
    return phase * (a / nv) ** (pf - 1.0)
