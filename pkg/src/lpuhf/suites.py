"""Verification suites run by ``lpuhf verify``.

Each suite takes a numpy Generator and returns a list of :class:`Record`.
Record ids and the set of checks do not depend on the seed; only the random
corpora do.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import exact as ex
from .criteria import (
    CONVERGENT_SPATIAL,
    DIVERGENT_NONAMENABLE,
    series_report,
    sum_product_consistency,
)
from .matalg import (
    DELTA,
    ElementaryTensorSum,
    delta,
    delta_op,
    diagonal_structure,
    flip_element,
    flip_from_group,
    matrix_unit,
    matrix_units,
    projective_lower_via_contraction,
    projective_upper,
    spatial_norm_fn,
)
from .perturbation import block_compression, diagonal_lower_bound, sign_selection, skewed_embedding, spatialize
from .pnorm import conjugation_map_norm, opnorm
from .simsys import (
    SimilaritySystem,
    gamma_corner_system,
    norm_pS,
    p_bound,
    random_diagonal_system,
    rep_matrix,
    tensor_systems,
)
from .spatial_check import is_spatial_rep
from .tensor_type import FamilyRecipe

PASS, FAIL, SKIP = "PASS", "FAIL", "SKIP"


@dataclass
class Record:
    id: str
    ref: str
    status: str
    measured: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)

    def to_json(self):
        return {"id": self.id, "ref": self.ref, "status": self.status,
                "measured": _jsonable(self.measured), "tolerances": _jsonable(self.tolerances)}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    return str(x)


def _status(ok):
    return PASS if ok else FAIL


def _fmt_p(p):
    return str(p)


# ---------------------------------------------------------------- flip


def suite_flip(rng):
    out = []
    for d in (2, 3, 4):
        y = flip_element(d)
        for p in (Fraction(1), Fraction(3, 2), Fraction(2), Fraction(3)):
            iv = opnorm(y, p)
            ok = iv.exact_value == Fraction(1, d) and iv.width == 0
            out.append(Record(f"flip.norm.d{d}.p{_fmt_p(p)}", "flip element norm is 1/d", _status(ok),
                              {"lower": iv.lower, "upper": iv.upper}, {"width": 0}))
    for d in (2, 3):
        y = flip_element(d)
        z = ElementaryTensorSum.flip(d)
        eye_d = ex.eye(d, True)
        sq = ex.array_equal(y @ y, ex.eye(d * d, True) * Fraction(1, d * d))
        dl = ex.array_equal(delta(z), eye_d) and ex.array_equal(delta_op(z), eye_d)
        conj_ok = True
        units = matrix_units(d)
        yinv = y * (d * d)
        for a, b in itertools.product(units.values(), repeat=2):
            if not ex.array_equal(y @ np.kron(a, b) @ yinv, np.kron(b, a)):
                conj_ok = False
                break
        out.append(Record(f"flip.square.d{d}", "y_d squared is d^-2", _status(sq), {"exact": sq}))
        out.append(Record(f"flip.delta.d{d}", "Delta and Delta^op of y_d are 1", _status(dl), {"exact": dl}))
        out.append(Record(f"flip.conjugation.d{d}", "y_d conjugation swaps tensor factors", _status(conj_ok),
                          {"pairs": len(units) ** 2}))
        group = ex.array_equal(flip_from_group(d), y)
        out.append(Record(f"flip.group_average.d{d}", "signed-permutation average equals y_d", _status(group)))
        zg = ElementaryTensorSum.flip_group_average(d)
        upper = projective_upper(zg, spatial_norm_fn(2, "upper"))
        lower = projective_lower_via_contraction(z, DELTA, spatial_norm_fn(2, "lower"))
        out.append(Record(f"flip.projective.d{d}", "projective norm of y_d pinned to 1",
                          _status(upper == 1 and lower == 1), {"upper": upper, "lower": lower}))
        pieces = diagonal_structure(z, d)
        diag_ok = all(ex.array_equal(pieces[(l, k)], np.array([[Fraction(int(l == k), d)]], dtype=object))
                      for l in range(1, d + 1) for k in range(1, d + 1))
        out.append(Record(f"flip.diagonal_structure.d{d}", "diagonal decomposition of y_d", _status(diag_ok)))
    return out


# ---------------------------------------------------------------- norms


def random_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def sphere_sample_max(a, p, n, rng, batch=20000):
    """max ||a x||_p / ||x||_p over n random complex Gaussian directions."""
    pf = float(p)
    best = 0.0
    left = n
    while left > 0:
        k = min(batch, left)
        x = random_complex(rng, (a.shape[1], k))
        num = (np.abs(a @ x) ** pf).sum(axis=0) ** (1 / pf)
        den = (np.abs(x) ** pf).sum(axis=0) ** (1 / pf)
        best = max(best, float((num / den).max()))
        left -= k
    return best


def suite_norms(rng, n_matrices=100, n_samples=100_000):
    out = []
    for d in (2, 3, 4):
        for g in (1, 2, 10):
            S = gamma_corner_system(d, g)
            for p in (1, 2, 3):
                worst = 0.0
                for j, k in itertools.product(range(1, d + 1), repeat=2):
                    iv = norm_pS(S, matrix_unit(d, j, k), p)
                    want = g if j != k else 1
                    worst = max(worst, abs(iv.lower - want), abs(iv.upper - want))
                out.append(Record(f"norms.matrix_units.d{d}.g{g}.p{p}", "matrix-unit norms under K corners",
                                  _status(worst <= 1e-9), {"max_error": worst}, {"abs": 1e-9}))
    # conjugation map norm against brute force over matrix units
    worst, attained = 0.0, True
    for _ in range(100):
        d = int(rng.integers(2, 6))
        alpha = random_complex(rng, d)
        s = np.diag(alpha)
        p = [1, 1.5, 2, 3][int(rng.integers(4))]
        iv = conjugation_map_norm(s, p)
        prod = np.abs(alpha).max() / np.abs(alpha).min()
        brute = max(opnorm(s @ ex.to_float(e) @ np.linalg.inv(s), p).upper for e in matrix_units(d).values())
        worst = max(worst, abs(iv.upper - prod), abs(iv.lower - prod))
        attained = attained and abs(brute - prod) <= 1e-9 * prod
    out.append(Record("norms.conjugation", "conjugation map norm is ||s|| ||s^-1||",
                      _status(worst <= 1e-9 and attained), {"max_error": worst, "attained_by_unit": attained},
                      {"abs": 1e-9}))
    # p-bound multiplicativity
    ok = True
    for _ in range(50):
        S1 = random_diagonal_system(rng, int(rng.integers(2, 4)), int(rng.integers(1, 4)))
        S2 = random_diagonal_system(rng, int(rng.integers(2, 4)), int(rng.integers(1, 4)))
        p = [1, 2, 3][int(rng.integers(3))]
        a, b, c = p_bound(S1, p), p_bound(S2, p), p_bound(tensor_systems(S1, S2), p)
        ok = ok and c.exact_value is not None and c.exact_value == a.exact_value * b.exact_value
    out.append(Record("norms.pbound_multiplicative", "p-bound of a tensor system is the product", _status(ok),
                      {"pairs": 50, "exact": ok}))
    out.extend(engine_soundness(rng, n_matrices, n_samples))
    return out


def engine_soundness(rng, n_matrices=100, n_samples=100_000):
    out = []
    for p in (1.5, 2.5):
        valid, sample_ok, boyd_ok = True, True, True
        worst_gap = math.inf
        for _ in range(n_matrices):
            a = random_complex(rng, (4, 4))
            iv = opnorm(a, p)
            valid = valid and 0 <= iv.lower <= iv.upper
            samp = sphere_sample_max(a, p, n_samples, rng)
            sample_ok = sample_ok and samp <= iv.upper * (1 + 1e-12)
            boyd_ok = boyd_ok and iv.lower >= samp - 1e-9
            worst_gap = min(worst_gap, iv.lower - samp)
        out.append(Record(f"norms.engine.p{p}", "norm intervals dominate sphere sampling",
                          _status(valid and sample_ok and boyd_ok),
                          {"valid": valid, "sample_below_upper": sample_ok, "lower_minus_sample_min": worst_gap},
                          {"abs": 1e-9}))
    worst = 0.0
    for _ in range(n_matrices):
        a = random_complex(rng, (4, 4))
        iv = opnorm(a, 2)
        sig = float(np.linalg.svd(a, compute_uv=False)[0])
        worst = max(worst, iv.width, abs(iv.upper - sig), abs(iv.lower - sig))
    out.append(Record("norms.engine.p2", "p = 2 norm matches the largest singular value",
                      _status(worst <= 1e-8), {"max_width_or_error": worst}, {"abs": 1e-8}))
    return out


# ---------------------------------------------------------------- sign selection / lower bound


def random_sign_instance(rng):
    d = int(rng.integers(1, 6))
    p = [1, 2, 3][int(rng.integers(3))]
    n = int(rng.integers(1, 6))
    alpha = random_complex(rng, d) * np.exp(rng.uniform(-2, 2, d))
    xi = random_complex(rng, (d, n))
    return alpha, xi, p


def suite_sign_selection(rng, n=200):
    worst = math.inf
    for _ in range(n):
        alpha, xi, p = random_sign_instance(rng)
        c = sign_selection(alpha, xi, p)
        worst = min(worst, c.achieved - c.bound)
    return [Record("sign_selection.random", "sign choice reaches sqrt(gamma / beta)", _status(worst >= -1e-9),
                   {"instances": n, "min_margin": worst}, {"abs": 1e-9})]


def suite_lower_bound(rng):
    out = []
    for d in (2, 3):
        for g in (1, 4, 9, 100):
            val = diagonal_lower_bound(ElementaryTensorSum.flip(d), gamma_corner_system(d, g), 2)
            out.append(Record(f"lower_bound.flip.d{d}.g{g}", "projective lower bound for y_d is sqrt(R)",
                              _status(val >= math.sqrt(g) - 1e-9), {"bound": val, "sqrt_gamma": math.sqrt(g)},
                              {"abs": 1e-9}))
    return out


# ---------------------------------------------------------------- decay


def suite_decay(rng):
    out, maxima = [], []
    tests = [rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)) for _ in range(20)]
    tests += [ex.to_float(e) for e in matrix_units(2).values()]
    for g in (10, 100, 1000):
        table, M = skewed_embedding(g)
        rep = block_compression(table, g, 1, M, 3, 2, tests=tests)
        maxima.append(rep.offdiag_max)
        out.append(Record(f"decay.g{g}", "off-diagonal blocks bounded by M gamma0 / gamma", _status(rep.ok),
                          {"offdiag_max": rep.offdiag_max, "bound": rep.bound}, {"abs": 1e-9}))
    rate_ok = all(maxima[i + 1] <= maxima[i] / 10 * (1 + 1e-9) for i in range(len(maxima) - 1))
    out.append(Record("decay.rate", "off-diagonal size decays like 1/gamma", _status(rate_ok), {"maxima": maxima}))
    return out


# ---------------------------------------------------------------- spatialize / spatial check


def suite_spatialize(rng, n=20):
    worst_res, worst_norm, spatial_ok = Fraction(0), 0.0, True
    for _ in range(n):
        S = random_diagonal_system(rng, int(rng.integers(2, 5)), int(rng.integers(1, 5)))
        p = [1, 2, 3][int(rng.integers(3))]
        sp = spatialize(S, p)
        worst_res = max(worst_res, sp.residual)
        R = sp.norms["R"]
        want = {"w": R, "w_minus_1": R - 1, "w_inv": 1.0, "w_inv_minus_1": 1 - 1 / R}
        worst_norm = max([worst_norm] + [abs(sp.norms[k] - v) for k, v in want.items()])
        spatial_ok = spatial_ok and bool(is_spatial_rep(sp.tau_table(), S.d, p, S.measure()))
    ok = worst_res == 0 and worst_norm <= 1e-12 and spatial_ok
    return [Record("spatialize.random", "diagonal systems are spatial up to conjugation by w", _status(ok),
                   {"systems": n, "max_residual": worst_res, "max_norm_error": worst_norm, "tau_spatial": spatial_ok},
                   {"residual": 0, "norm": 1e-12})]


def _rep_table(S):
    return {jk: rep_matrix(S, e) for jk, e in matrix_units(S.d).items()}


def signed_permutation_system(rng, d, k):
    from .matalg import signed_permutation_group

    group = signed_permutation_group(d)
    picks = [ex.eye(d, True)] + [group[int(rng.integers(len(group)))] for _ in range(k - 1)]
    labels = tuple(f"g{i}" for i in range(k))
    return SimilaritySystem(d, labels, tuple(picks), (Fraction(1, k),) * k, False)


def suite_spatial_check(rng):
    out = []
    for d in (2, 3):
        S = signed_permutation_system(rng, d, 3)
        for p in (1, 3):
            v = is_spatial_rep(_rep_table(S), d, p, S.measure())
            out.append(Record(f"spatial_check.signed_permutations.d{d}.p{p}", "signed-permutation systems are spatial",
                              _status(bool(v)), {"reason": v.reason}))
    S = SimilaritySystem(2, ("1", "a"), (ex.eye(2, True), np.array([[Fraction(1), 0], [0, Fraction(2)]], dtype=object)),
                         (Fraction(1, 2), Fraction(1, 2)), True)
    v = is_spatial_rep(_rep_table(S), 2, 3, S.measure())
    ok = not v and "norm" in v.reason and "e_{2,1}" in v.reason
    out.append(Record("spatial_check.diag_1_2.p3", "non-isometric diagonal system is rejected", _status(ok),
                      {"reason": v.reason}))
    return out


# ---------------------------------------------------------------- series


def suite_series(rng):
    out = []
    for a, want in ((2, CONVERGENT_SPATIAL), (1, DIVERGENT_NONAMENABLE)):
        rep = series_report(FamilyRecipe("power", {"c": Fraction(1), "a": Fraction(a)}), 2, 50)
        out.append(Record(f"series.power.a{a}", "p-series verdict", _status(rep.verdict == want),
                          {"verdict": rep.verdict, "partial_sum": rep.partial_sums[-1]}))
    for name, alphas in (
        ("power2", [1 + Fraction(1, n * n) for n in range(1, 1001)]),
        ("harmonic", [1 + Fraction(1, n) for n in range(1, 1001)]),
        ("geometric", [1 + 2.0 ** -n for n in range(1, 1001)]),
        ("random", list(1 + rng.exponential(1.0, 1000))),
    ):
        ok = sum_product_consistency(alphas)
        out.append(Record(f"series.sum_product.{name}", "sum and product of (R - 1) converge together",
                          _status(ok), {"terms": len(alphas)}, {"log": 1e-9}))
    return out


SUITES = {
    "flip": suite_flip,
    "norms": suite_norms,
    "sign-selection": suite_sign_selection,
    "lower-bound": suite_lower_bound,
    "decay": suite_decay,
    "spatialize": suite_spatialize,
    "spatial-check": suite_spatial_check,
    "series": suite_series,
}


def run_suites(names, seed=0):
    """Run suites in the given order, each with its own generator derived from ``seed``."""
    records = []
    for name in names:
        rng = np.random.default_rng([seed, list(SUITES).index(name)])
        records.extend(SUITES[name](rng))
    return records
