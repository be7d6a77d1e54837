"""Exact Gaussian-rational scalars and object-array helpers.

Exact matrices are numpy arrays of dtype ``object`` whose entries are
``int``, ``Fraction`` or :class:`QQi`.  numpy's ``@``, ``np.kron`` and
elementwise ops work on them unchanged; only inversion needs a dedicated
routine.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational

import numpy as np


def rational_sqrt(q):
    """Square root of a nonnegative rational if it is rational, else None."""
    q = Fraction(q)
    if q < 0:
        return None
    rn, rd = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if rn * rn == q.numerator and rd * rd == q.denominator:
        return Fraction(rn, rd)
    return None


class QQi:
    """Complex number with rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @staticmethod
    def _coerce(other):
        if isinstance(other, QQi):
            return other
        if isinstance(other, (int, Rational)):
            return QQi(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return QQi(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return QQi(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return QQi(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        den = o.re * o.re + o.im * o.im
        if den == 0:
            raise ZeroDivisionError("QQi division by zero")
        num = self * o.conjugate()
        return QQi(num.re / den, num.im / den)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o / self

    def __neg__(self):
        return QQi(-self.re, -self.im)

    def __pos__(self):
        return self

    def conjugate(self):
        return QQi(self.re, -self.im)

    def norm2(self):
        return self.re * self.re + self.im * self.im

    def __abs__(self):
        r = rational_sqrt(self.norm2())
        return r if r is not None else math.sqrt(self.norm2())

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            if isinstance(other, (float, complex)):
                return complex(self) == other
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __repr__(self):
        return f"QQi({self.re}, {self.im})"


def exact_modulus(z):
    """|z| as an exact rational; raises ValueError if it is irrational."""
    if isinstance(z, QQi):
        r = rational_sqrt(z.norm2())
        if r is None:
            raise ValueError(f"modulus of {z!r} is not rational")
        return r
    return abs(Fraction(z))


def exact_sgn(z):
    """z/|z| exactly (0 maps to 1, matching the convention sgn(0)=1 used for phases)."""
    if z == 0:
        return Fraction(1)
    m = exact_modulus(z)
    return z / m


def to_scalar(x):
    """Convert a python/numpy scalar to an exact scalar."""
    if isinstance(x, (QQi, Fraction)):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, (complex, np.complexfloating)):
        x = complex(x)
        if x.imag == 0:
            return Fraction(x.real)
        return QQi(Fraction(x.real), Fraction(x.imag))
    return Fraction(x)


def is_exact(a):
    return isinstance(a, np.ndarray) and a.dtype == object


def to_exact(a):
    """Object-array copy of ``a`` with exact entries (floats map to their binary value)."""
    a = np.asarray(a)
    out = np.empty(a.shape, dtype=object)
    for idx, x in np.ndenumerate(a):
        out[idx] = to_scalar(x)
    return out


def to_float(a):
    """complex128 view of a (possibly exact) array."""
    a = np.asarray(a)
    if a.dtype == object:
        return np.vectorize(complex, otypes=[complex])(a) if a.size else a.astype(complex)
    return a.astype(complex)


def eye(n, exact=False):
    if not exact:
        return np.eye(n, dtype=complex)
    out = np.full((n, n), Fraction(0), dtype=object)
    for i in range(n):
        out[i, i] = Fraction(1)
    return out


def zeros(shape, exact=False):
    if not exact:
        return np.zeros(shape, dtype=complex)
    return np.full(shape, Fraction(0), dtype=object)


def inv(a):
    """Exact inverse by Gauss-Jordan elimination; ValueError if singular."""
    a = to_exact(a)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("inverse of a non-square matrix")
    m = np.concatenate([a, eye(n, exact=True)], axis=1)
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r, col] != 0), None)
        if piv is None:
            raise ValueError("matrix is singular")
        if piv != col:
            m[[col, piv]] = m[[piv, col]]
        m[col] = m[col] / m[col, col]
        for r in range(n):
            if r != col and m[r, col] != 0:
                m[r] = m[r] - m[r, col] * m[col]
    return m[:, n:]


def array_equal(a, b):
    """Entrywise equality; exact when both sides are exact."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        return False
    return all(x == y for x, y in zip(a.ravel(), b.ravel()))


def parse_rational(x):
    """Accept ints, floats, or 'n/d' strings; strings stay exact."""
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, bool):
        raise ValueError("boolean is not a number")
    if isinstance(x, int):
        return Fraction(x)
    return float(x)


def parse_complex(x):
    """JSON scalar: number, 'n/d' string, or [re, im] pair of either."""
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise ValueError(f"complex entry must be [re, im], got {x!r}")
        re, im = parse_rational(x[0]), parse_rational(x[1])
        if isinstance(re, Fraction) and isinstance(im, Fraction):
            return re if im == 0 else QQi(re, im)
        return complex(float(re), float(im))
    return parse_rational(x)


def matrix_from_json(rows):
    """Row-major nested list -> array; exact if every entry parsed exactly."""
    vals = [[parse_complex(x) for x in row] for row in rows]
    if not vals or any(len(r) != len(vals[0]) for r in vals):
        raise ValueError("matrix rows must be nonempty and of equal length")
    if all(isinstance(x, (Fraction, QQi)) for r in vals for x in r):
        out = np.empty((len(vals), len(vals[0])), dtype=object)
        for i, r in enumerate(vals):
            for j, x in enumerate(r):
                out[i, j] = x
        return out
    return np.array([[complex(x) for x in r] for r in vals], dtype=complex)


def matrix_to_json(a):
    """Array -> row-major [[[re, im], ...], ...] with floats."""
    a = to_float(a)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]
