import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eqlines.numerics import (
    T,
    SymMatrixExact,
    SymMatrixFloat,
    UniPoly,
    as_rational,
    is_psd_exact,
    psd_check,
)

fractions = st.fractions(min_value=-10, max_value=10, max_denominator=50)
polys = st.lists(fractions, max_size=6).map(lambda cs: UniPoly(tuple(cs)))


def test_as_rational_accepts_exact_inputs():
    assert as_rational("1/5") == Fraction(1, 5)
    assert as_rational(3) == 3
    assert as_rational(Fraction(2, 4)) == Fraction(1, 2)


def test_as_rational_rejects_float():
    with pytest.raises(TypeError):
        as_rational(0.2)


def test_zero_polynomial():
    z = UniPoly((0, 0))
    assert z.is_zero() and z.coeffs == ()
    assert z.degree < 0
    assert (T - T).is_zero()


@given(polys, polys, fractions)
def test_evaluation_is_a_ring_homomorphism(f, g, t):
    assert (f + g)(t) == f(t) + g(t)
    assert (f - g)(t) == f(t) - g(t)
    assert (f * g)(t) == f(t) * g(t)


@given(polys, polys)
def test_degree_of_product(f, g):
    if f.is_zero() or g.is_zero():
        assert (f * g).is_zero()
    else:
        assert (f * g).degree == f.degree + g.degree


def test_symmetric_matrix_validation():
    with pytest.raises(ValueError):
        SymMatrixExact(((1, 2), (3, 4)))
    with pytest.raises(ValueError):
        SymMatrixExact(((1, 2),))
    m = SymMatrixExact.diagonal([1, "1/2"])
    assert m.is_diagonal() and m[1, 1] == Fraction(1, 2)
    assert SymMatrixExact.zeros(3).is_zero()
    assert np.allclose(SymMatrixExact.identity(2).to_float().array, np.eye(2))


def test_float_matrix_mirrors_upper_triangle():
    m = SymMatrixFloat([[1.0, 2.0], [99.0, 3.0]])
    assert m.array[1, 0] == 2.0


def test_psd_check_reports_min_eig():
    ok, lam = psd_check(np.diag([2.0, -1e-12]), tol=1e-9)
    assert ok and lam == pytest.approx(-1e-12)
    ok, lam = psd_check(np.array([[1.0, 2.0], [2.0, 1.0]]))
    assert not ok and lam == pytest.approx(-1.0)


small_ints = st.integers(-4, 4)


@settings(max_examples=60)
@given(st.integers(1, 4).flatmap(
    lambda d: st.lists(st.lists(small_ints, min_size=d, max_size=d), min_size=d, max_size=d)))
def test_exact_psd_agrees_with_gram_construction(rows):
    b = np.array(rows, dtype=object)
    gram = b.dot(b.T)
    m = SymMatrixExact(tuple(tuple(int(v) for v in r) for r in gram))
    assert is_psd_exact(m)
    eig = float(np.linalg.eigvalsh(np.array(gram, dtype=float))[0])
    # shift by an integer strictly larger than the smallest eigenvalue
    c = math.floor(eig + 1e-9) + 1
    shifted = SymMatrixExact(tuple(tuple(int(v) - (c if i == j else 0) for j, v in enumerate(r))
                                   for i, r in enumerate(gram)))
    assert not is_psd_exact(shifted)


def test_exact_psd_zero_pivot_rule():
    assert is_psd_exact(SymMatrixExact(((0, 0), (0, 1))))
    assert not is_psd_exact(SymMatrixExact(((0, 1), (1, 5))))
