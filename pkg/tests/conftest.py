from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from lpuhf import exact as ex
from lpuhf.simsys import SimilaritySystem

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# rationals bounded away from zero, kept small so exact arithmetic stays cheap
moduli = st.builds(Fraction, st.integers(1, 12), st.integers(1, 12))
phases = st.sampled_from([ex.QQi(1), ex.QQi(-1), ex.QQi(0, 1), ex.QQi(0, -1),
                          ex.QQi(Fraction(3, 5), Fraction(4, 5)), ex.QQi(Fraction(-5, 13), Fraction(12, 13))])


@st.composite
def exact_diagonal(draw, d):
    out = ex.zeros((d, d), exact=True)
    for j in range(d):
        v = draw(phases) * draw(moduli)
        out[j, j] = v.re if v.im == 0 else v
    return out


@st.composite
def diagonal_systems(draw, d=None, max_index=3):
    d = draw(st.integers(2, 3)) if d is None else d
    k = draw(st.integers(0, max_index - 1))
    mats = [ex.eye(d, exact=True)] + [draw(exact_diagonal(d)) for _ in range(k)]
    raw = draw(st.lists(st.integers(1, 9), min_size=k + 1, max_size=k + 1))
    weights = tuple(Fraction(r, sum(raw)) for r in raw)
    return SimilaritySystem(d, tuple(f"i{t}" for t in range(k + 1)), tuple(mats), weights, True)


def two_by_two(a, b, c, e):
    return np.array([[Fraction(a), Fraction(b)], [Fraction(c), Fraction(e)]], dtype=object)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
