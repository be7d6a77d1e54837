"""Finite truncations of tensor-product-type algebras.

A :class:`StageSpec` lists stage systems S_1, S_2, ... with dimensions
d(1), d(2), ...; the algebra at stage n is M_{r_d(n)} with the norm of the
combined system S_1 (x) ... (x) S_n.  Infinite sequences are described by a
:class:`FamilyRecipe` and materialized stage by stage.
"""

from __future__ import annotations

import math
import os
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from sympy import factorint

from . import exact as ex
from .core_spaces import as_exponent
from .errors import CapacityError, InputError
from .simsys import (
    basic_system,
    gamma_corner_system,
    max_dim,
    norm_pS,
    p_bound,
    system_from_json,
    tensor_systems,
)

DEFAULT_MAX_INDEX = 4096


def max_index():
    """Cap on the number of indices of a materialized combined system (env LPUHF_MAX_INDEX)."""
    try:
        return int(os.environ.get("LPUHF_MAX_INDEX", DEFAULT_MAX_INDEX))
    except ValueError:
        return DEFAULT_MAX_INDEX


@dataclass
class StageSpec:
    """Stage systems S_1..S_N (each carrying its dimension) and the exponent p."""

    systems: tuple
    p: object = Fraction(2)

    def __post_init__(self):
        self.systems = tuple(self.systems)
        self.p = as_exponent(self.p, allow_inf=False)
        for S in self.systems:
            if S.d < 2:
                raise InputError(f"stage dimension must be >= 2, got {S.d}")

    @property
    def dims(self):
        return tuple(S.d for S in self.systems)

    def __len__(self):
        return len(self.systems)

    @classmethod
    def from_dims(cls, dims, p=2):
        """All-basic stages (the spatial algebra of the given type)."""
        return cls(tuple(basic_system(d) for d in dims), p)


def _check_range(spec, *ns):
    for n in ns:
        if not 0 <= n <= len(spec):
            raise InputError(f"stage {n} out of range 0..{len(spec)}")


def r_d(spec, n):
    """d(1) d(2) ... d(n) as a Python int; r_d(0) = 1."""
    _check_range(spec, n)
    return math.prod(spec.dims[:n])


@dataclass(frozen=True)
class SupernaturalNumber:
    """Prime exponents of a (truncated) product of stage dimensions."""

    exponents: tuple  # sorted (prime, exponent) pairs with exponent > 0
    truncated: bool = True

    @classmethod
    def from_dims(cls, dims, truncated=True):
        total = Counter()
        for d in dims:
            total.update(factorint(int(d)))
        return cls(tuple(sorted((int(q), int(e)) for q, e in total.items() if e > 0)), truncated)

    def as_dict(self):
        return dict(self.exponents)

    def __str__(self):
        body = " * ".join(f"{q}^{e}" for q, e in self.exponents) or "1"
        return body + (" (truncated)" if self.truncated else "")


def supernatural_truncated(spec, n):
    _check_range(spec, n)
    return SupernaturalNumber.from_dims(spec.dims[:n], truncated=True)


def combined_system(spec, m, n):
    """S_{m+1} (x) ... (x) S_n; the scalar system {1} when m = n.

    Checks that the p-bound is the product of the stage p-bounds.
    """
    _check_range(spec, m, n)
    if m > n:
        raise InputError(f"need m <= n, got m={m}, n={n}")
    if m == n:
        S = basic_system(1)
        S.name = "scalar"
        return S
    dim = math.prod(spec.dims[m:n])
    count = math.prod(len(S) for S in spec.systems[m:n])
    if dim > max_dim():
        raise CapacityError(f"stage dimension {dim} exceeds cap {max_dim()}")
    if count > max_index():
        raise CapacityError(f"combined system has {count} indices, above cap {max_index()}")
    T = spec.systems[m]
    for S in spec.systems[m + 1:n]:
        T = tensor_systems(T, S)
    _check_multiplicative(spec, T, m, n)
    return T


def _check_multiplicative(spec, T, m, n):
    parts = [p_bound(S, spec.p) for S in spec.systems[m:n]]
    whole = p_bound(T, spec.p)
    if all(iv.exact_value is not None for iv in parts) and whole.exact_value is not None:
        prod = math.prod(iv.exact_value for iv in parts)
        if prod != whole.exact_value:
            raise AssertionError(f"p-bound {whole.exact_value} is not the product {prod}")
        return
    lo = math.prod(iv.lower for iv in parts)
    hi = math.prod(iv.upper for iv in parts)
    if whole.upper < lo * (1 - 1e-9) or whole.lower > hi * (1 + 1e-9):
        raise AssertionError(f"p-bound {whole} disagrees with product [{lo}, {hi}]")


def sigma_embed(x, spec, m, n):
    """x (x) 1 from M_{r_d(m)} into M_{r_d(n)}."""
    _check_range(spec, m, n)
    if m > n:
        raise InputError(f"need m <= n, got m={m}, n={n}")
    x = np.asarray(x)
    rm, rn = r_d(spec, m), r_d(spec, n)
    if x.shape != (rm, rm):
        raise InputError(f"element of shape {x.shape} is not in M_{rm}")
    if rn > max_dim():
        raise CapacityError(f"dimension {rn} exceeds cap {max_dim()}")
    if m == n:
        return x.copy()
    return np.kron(x, ex.eye(rn // rm, ex.is_exact(x)))


def stage_norm(spec, x, n):
    """Norm of x in the stage-n algebra."""
    x = np.asarray(x)
    rn = r_d(spec, n)
    if x.shape != (rn, rn):
        raise InputError(f"element of shape {x.shape} is not in M_{rn}")
    return norm_pS(combined_system(spec, 0, n), x, spec.p, m=1)


# ---------------------------------------------------------------- families


@dataclass(frozen=True)
class FamilyRecipe:
    """Closed-form stage sequence: stage n is the K_{d,gamma(n)} corner system.

    kinds: ``power`` gamma(n) = 1 + c n^-a; ``geometric`` 1 + c q^n;
    ``log`` 1 + c / (n log(n+1)^a); ``constant`` gamma(n) = c.
    """

    kind: str
    params: dict = field(default_factory=dict)
    d: int = 2

    KINDS = ("power", "geometric", "log", "constant")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise InputError(f"unknown family {self.kind!r}; expected one of {self.KINDS}")
        need = {"power": ("c", "a"), "geometric": ("c", "q"), "log": ("c", "a"), "constant": ("c",)}[self.kind]
        missing = [k for k in need if k not in self.params]
        if missing:
            raise InputError(f"family {self.kind} needs parameters {missing}")
        if self.kind != "constant" and self.params["c"] < 0:
            raise InputError("family parameter c must be >= 0")
        if self.kind == "constant" and self.params["c"] < 1:
            raise InputError("constant family needs c >= 1")
        if self.kind == "geometric" and not 0 <= self.params["q"]:
            raise InputError("geometric family needs q >= 0")

    def gamma(self, n):
        """gamma(n) for n >= 1; exact Fraction where the closed form is rational."""
        c = self.params["c"]
        if self.kind == "power":
            a = self.params["a"]
            if isinstance(c, Fraction) and isinstance(a, Fraction) and a.denominator == 1:
                return 1 + c / Fraction(n) ** int(a)
            return 1 + float(c) * n ** -float(a)
        if self.kind == "geometric":
            q = self.params["q"]
            if isinstance(c, Fraction) and isinstance(q, Fraction):
                return 1 + c * q ** n
            return 1 + float(c) * float(q) ** n
        if self.kind == "log":
            return 1 + float(c) / (n * math.log(n + 1) ** float(self.params["a"]))
        return c

    def system(self, n):
        return gamma_corner_system(self.d, self.gamma(n))

    def spec(self, N, p=2):
        return StageSpec(tuple(self.system(n) for n in range(1, N + 1)), p)

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, dict) or "family" not in obj:
            raise InputError("family recipe must be an object with a 'family' key")
        try:
            params = {k: ex.parse_rational(v) for k, v in obj.items() if k not in ("family", "d")}
        except (ValueError, TypeError) as exc:
            raise InputError(f"bad family parameter: {exc}") from exc
        return cls(obj["family"], params, int(obj.get("d", 2)))

    def to_json(self):
        out = {"family": self.kind, "d": self.d}
        for k, v in self.params.items():
            out[k] = f"{v.numerator}/{v.denominator}" if isinstance(v, Fraction) else v
        return out


def spec_from_json(obj):
    """Stage spec JSON: {"p": ..., "stages": [{"d": int, "system": {...}}, ...]}."""
    if not isinstance(obj, dict) or "stages" not in obj:
        raise InputError("stage spec must be an object with a 'stages' list")
    systems = []
    for k, st in enumerate(obj["stages"], start=1):
        try:
            d = int(st["d"])
            sj = dict(st.get("system", {"family": "gamma_corner", "gamma": 1}))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"stage {k}: {exc}") from exc
        sj.setdefault("d", d)
        S = system_from_json(sj)
        if S.d != d:
            raise InputError(f"stage {k}: system dimension {S.d} differs from d={d}")
        systems.append(S)
    return StageSpec(tuple(systems), obj.get("p", 2))
