import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eqlines.threepoint import (
    TriplePoint,
    positivity_probe,
    s_matrix,
    s_matrix_float,
    y_matrix,
)

from oracles import s_matrix_radical, y_entry_radical

inner = st.fractions(min_value=Fraction(-19, 20), max_value=Fraction(19, 20), max_denominator=30)


def _as_float(m):
    return np.array([[float(v) for v in r] for r in m])


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 30), st.integers(0, 5), inner, inner, inner)
def test_y_matches_radical_formula(n, k, u, v, t):
    p = 5
    y = _as_float(y_matrix(n, p, k, (u, v, t)))
    ref = np.array([[y_entry_radical(n, k, i, j, float(u), float(v), float(t))
                     for j in range(p - k + 1)] for i in range(p - k + 1)])
    assert np.allclose(y, ref, atol=1e-10, rtol=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.integers(3, 30), st.integers(0, 4), inner, inner, inner)
def test_s_matches_radical_formula(n, k, u, v, t):
    s = _as_float(s_matrix(n, 4, k, (u, v, t)).m.rows)
    assert np.allclose(s, s_matrix_radical(n, 4, k, float(u), float(v), float(t)), atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 20), st.integers(0, 5), inner, inner, inner)
def test_s_is_permutation_invariant(n, k, u, v, t):
    ref = s_matrix(n, 5, k, (u, v, t)).m
    for perm in itertools.permutations((u, v, t)):
        assert s_matrix(n, 5, k, perm).m == ref


@settings(max_examples=20, deadline=None)
@given(st.integers(3, 20), st.integers(0, 5), st.lists(st.tuples(inner, inner, inner), min_size=1,
                                                       max_size=4))
def test_float_sum_matches_exact(n, k, triples):
    exact = sum(_as_float(s_matrix(n, 5, k, tr).m.rows) for tr in triples)
    u, v, t = (np.array([float(tr[i]) for tr in triples]) for i in range(3))
    assert np.allclose(s_matrix_float(n, 5, k, u, v, t), exact, atol=1e-10)


def test_boundary_triples_are_polynomial():
    # at u = v = t = 1 only k = 0 survives, as the all-ones matrix
    ones = s_matrix(10, 5, 0, (1, 1, 1)).m
    assert all(v == 1 for r in ones.rows for v in r)
    for k in range(1, 6):
        assert s_matrix(10, 5, k, (1, 1, 1)).m.is_zero()
    a = Fraction(1, 5)
    m = s_matrix(23, 5, 2, (a, a, 1)).m
    assert m.dim == 4


def test_triple_validation():
    with pytest.raises(ValueError):
        TriplePoint(Fraction(3, 2), 0, 0)
    with pytest.raises(ValueError):
        y_matrix(2, 5, 0, (0, 0, 0))
    with pytest.raises(ValueError):
        s_matrix(5, 3, 4, (0, 0, 0))


def _random_code(rng, n, size):
    x = rng.standard_normal((size, n))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


@settings(max_examples=25, deadline=None)
@given(st.integers(4, 8), st.integers(0, 6), st.integers(2, 12), st.integers(0, 2**32 - 1))
def test_positivity_on_random_codes(n, k, size, seed):
    pts = _random_code(np.random.default_rng(seed), n, size)
    two, three = positivity_probe(n, pts, k, p=6)
    assert two >= -1e-9 * size**2
    assert three >= -1e-9 * size**3


def test_probe_rejects_non_unit_vectors():
    with pytest.raises(ValueError):
        positivity_probe(3, [[1.0, 1.0, 0.0]], 1)
    with pytest.raises(ValueError):
        positivity_probe(3, [[1.0, 0.0]], 1)
