"""Spatial partial isometries on finite atomic measure spaces.

On an atomic space a spatial partial isometry is a partial bijection of atoms
with unimodular phases, rescaled by the change-of-measure factor
(w_k / w_j)^(1/p).  As a matrix it is monomial with |t_{j,k}| equal to that
factor.  A representation of M_d is spatial when every matrix unit maps to
such an operator and the images of e_{j,j} have supports partitioning the atoms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import exact as ex
from .core_spaces import finite_exponent
from .errors import InputError
from .pnorm import opnorm

TOL = 1e-9


@dataclass(frozen=True)
class SpatialPartialIsometry:
    """Partial bijection of atoms (0-based): ``atom_map[j] = k`` sends domain atom k to range atom j."""

    atom_map: tuple  # sorted (range atom, domain atom) pairs
    phases: tuple  # unimodular phase per pair, same order
    n_dom: int
    n_cod: int
    p: object
    dom_weights: tuple = None
    cod_weights: tuple = None

    def __post_init__(self):
        rng = [j for j, _ in self.atom_map]
        dom = [k for _, k in self.atom_map]
        if len(set(rng)) != len(rng) or len(set(dom)) != len(dom):
            raise InputError("atom map is not a partial bijection")
        if len(self.phases) != len(self.atom_map):
            raise InputError("one phase per mapped atom is required")
        if any(abs(abs(complex(z)) - 1.0) > TOL for z in self.phases):
            raise InputError("phases must be unimodular")

    @property
    def domain_support(self):
        return frozenset(k for _, k in self.atom_map)

    @property
    def range_support(self):
        return frozenset(j for j, _ in self.atom_map)

    def _factor(self, j, k):
        if self.dom_weights is None:
            return 1.0
        return (float(self.dom_weights[k]) / float(self.cod_weights[j])) ** (1.0 / float(self.p))

    def matrix(self):
        out = np.zeros((self.n_cod, self.n_dom), dtype=complex)
        for (j, k), z in zip(self.atom_map, self.phases):
            out[j, k] = complex(z) * self._factor(j, k)
        return out

    def compose(self, other):
        """self o other, defined where other's range meets self's domain."""
        if other.n_cod != self.n_dom:
            raise InputError("incompatible sizes for composition")
        mine = {k: (j, z) for (j, k), z in zip(self.atom_map, self.phases)}
        pairs = []
        for (j, k), z in zip(other.atom_map, other.phases):
            if j in mine:
                jj, zz = mine[j]
                pairs.append(((jj, k), complex(zz) * complex(z)))
        pairs.sort()
        return SpatialPartialIsometry(tuple(a for a, _ in pairs), tuple(z for _, z in pairs), other.n_dom,
                                      self.n_cod, self.p, other.dom_weights, self.cod_weights)


@dataclass(frozen=True)
class Refusal:
    reason: str

    def __bool__(self):
        return False


def _weights(m, n):
    if m is None:
        return None
    if len(m) != n:
        raise InputError("measure size does not match the matrix")
    return tuple(m.weights)


def recognize_spi(a, p, dom=None, cod=None):
    """Decompose ``a`` as a spatial partial isometry, or return a :class:`Refusal`."""
    p = finite_exponent(p)
    a = np.asarray(a)
    if a.ndim != 2:
        raise InputError("expected a matrix")
    rows, cols = a.shape
    wd, wc = _weights(dom, cols), _weights(cod, rows)
    af = ex.to_float(a)
    nz = np.abs(af) > 0
    for j in range(rows):
        if nz[j].sum() > 1:
            return Refusal(f"row {j + 1} has {int(nz[j].sum())} nonzero entries")
    for k in range(cols):
        if nz[:, k].sum() > 1:
            return Refusal(f"column {k + 1} has {int(nz[:, k].sum())} nonzero entries")
    pairs, phases = [], []
    for j, k in zip(*np.nonzero(nz)):
        j, k = int(j), int(k)
        want = 1.0 if wd is None else (float(wd[k]) / float(wc[j])) ** (1.0 / float(p))
        mod = abs(af[j, k])
        if abs(mod - want) > TOL * max(1.0, want):
            return Refusal(f"entry ({j + 1}, {k + 1}) has modulus {mod:g}, expected {want:g}")
        pairs.append((j, k))
        phases.append(af[j, k] / mod)
    order = sorted(range(len(pairs)), key=lambda t: pairs[t])
    return SpatialPartialIsometry(tuple(pairs[t] for t in order), tuple(phases[t] for t in order),
                                  cols, rows, p, wd, wc)


@dataclass
class SpatialVerdict:
    spatial: bool
    partition: list  # supports of rho(e_{j,j}), j = 1..d
    reason: str = ""

    def __bool__(self):
        return self.spatial


def _check_rep(table, d, n):
    ident = np.eye(n)
    keys = [(j, k) for j in range(1, d + 1) for k in range(1, d + 1)]
    missing = [jk for jk in keys if jk not in table]
    if missing:
        raise InputError(f"representation table lacks e_{missing[0]}")
    mats = {jk: ex.to_float(np.asarray(table[jk])) for jk in keys}
    if any(m.shape != (n, n) for m in mats.values()):
        raise InputError("representation images must be square and of equal size")
    if not np.allclose(sum(mats[(j, j)] for j in range(1, d + 1)), ident, atol=TOL):
        raise InputError("representation is not unital")
    for (i, j) in keys:
        for (k, l) in keys:
            want = mats[(i, l)] if j == k else np.zeros((n, n))
            if not np.allclose(mats[(i, j)] @ mats[(k, l)], want, atol=TOL):
                raise InputError(f"representation is not multiplicative at e_{{{i},{j}}} e_{{{k},{l}}}")
    return mats


def is_spatial_rep(table, d, p, measure=None):
    """Decide spatiality of a representation of M_d given on matrix units.

    ``table`` maps 1-based (j, k) to the image matrix.  Non-multiplicative
    or non-unital tables raise :class:`InputError`.
    """
    p = finite_exponent(p)
    n = np.asarray(next(iter(table.values()))).shape[0]
    mats = _check_rep(table, d, n)
    # matrix units of M_d have norm 1, so a spatial image must too
    for (j, k), m in mats.items():
        nrm = opnorm(m, p, measure, measure)
        if nrm.lower > 1.0 + TOL or nrm.upper < 1.0 - TOL:
            return SpatialVerdict(False, [], f"rho(e_{{{j},{k}}}) has norm {nrm.upper:g} != 1")
    spis = {}
    for (j, k), m in mats.items():
        r = recognize_spi(m, p, measure, measure)
        if not r:
            return SpatialVerdict(False, [], f"rho(e_{{{j},{k}}}) is not a spatial partial isometry: {r.reason}")
        spis[(j, k)] = r
    supports = [spis[(j, j)].range_support for j in range(1, d + 1)]
    union = frozenset().union(*supports)
    if sum(len(s) for s in supports) != n or union != frozenset(range(n)):
        return SpatialVerdict(False, supports, "supports of rho(e_{j,j}) do not partition the atoms")
    for (j, k), t in spis.items():
        if t.domain_support != supports[k - 1] or t.range_support != supports[j - 1]:
            return SpatialVerdict(False, supports, f"rho(e_{{{j},{k}}}) does not map support {k} onto support {j}")
    return SpatialVerdict(True, supports)


def direct_sum_spi(parts):
    """Disjoint union of spatial partial isometries.

    Each part is an SPI (placed on the next block of atoms) or a pair
    ``(atom_labels, spi)``; labelled parts sharing an atom raise InputError.
    """
    parts = list(parts)
    if not parts:
        raise InputError("direct sum of no parts")
    seen = set()
    spis = []
    for part in parts:
        if isinstance(part, SpatialPartialIsometry):
            spis.append(part)
            continue
        labels, t = part
        overlap = seen & set(labels)
        if overlap:
            raise InputError(f"parts share atoms {sorted(overlap, key=str)[:3]}")
        seen |= set(labels)
        spis.append(t)
    p = spis[0].p
    if any(t.p != p for t in spis):
        raise InputError("all parts must use the same exponent")
    pairs, phases, wd, wc = [], [], [], []
    od = oc = 0
    weighted = any(t.dom_weights is not None for t in spis)
    for t in spis:
        for (j, k), z in zip(t.atom_map, t.phases):
            pairs.append((j + oc, k + od))
            phases.append(z)
        wd.extend(t.dom_weights if t.dom_weights is not None else (1,) * t.n_dom)
        wc.extend(t.cod_weights if t.cod_weights is not None else (1,) * t.n_cod)
        od += t.n_dom
        oc += t.n_cod
    return SpatialPartialIsometry(tuple(pairs), tuple(phases), od, oc, p,
                                  tuple(wd) if weighted else None, tuple(wc) if weighted else None)
