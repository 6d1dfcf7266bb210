import threading
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from eqlines.gegenbauer import (
    g4_closed_form,
    gegenbauer_eval,
    gegenbauer_expand,
    gegenbauer_float,
    gegenbauer_poly,
)
from eqlines.numerics import T, UniPoly

from oracles import gegenbauer_scipy

dims = st.integers(2, 80)
degrees = st.integers(0, 12)
points = st.fractions(min_value=-1, max_value=1, max_denominator=40)


def test_low_degrees():
    assert gegenbauer_poly(5, 0) == UniPoly.constant(1)
    assert gegenbauer_poly(5, 1) == T
    # G_2 = (n t^2 - 1) / (n - 1)
    for n in (3, 7, 23):
        assert gegenbauer_poly(n, 2) == (T * T * n - 1) * Fraction(1, n - 1)


def test_dimension_two_is_chebyshev():
    # T_4(t) = 8t^4 - 8t^2 + 1
    assert gegenbauer_poly(2, 4) == UniPoly((1, 0, -8, 0, 8))


def test_known_value_71():
    assert gegenbauer_eval(71, 4, Fraction(1, 5)) == Fraction(-1, 875)


@pytest.mark.parametrize("n", [3, 4, 10, 71, 239])
def test_closed_form_g4(n):
    assert g4_closed_form(n) == gegenbauer_poly(n, 4)


def test_bad_arguments():
    with pytest.raises(ValueError):
        gegenbauer_poly(1, 2)
    with pytest.raises(ValueError):
        gegenbauer_poly(5, -1)
    with pytest.raises(TypeError):
        gegenbauer_eval(5, 2, 0.5)


@given(dims, degrees)
def test_normalization(n, k):
    assert gegenbauer_eval(n, k, 1) == 1


@given(dims, degrees, points)
def test_parity(n, k, t):
    assert gegenbauer_eval(n, k, -t) == (-1) ** k * gegenbauer_eval(n, k, t)


@given(dims, degrees, points)
def test_bounded_on_interval(n, k, t):
    assert abs(gegenbauer_eval(n, k, t)) <= 1


@given(dims, degrees, points)
def test_value_recursion_matches_polynomial(n, k, t):
    assert gegenbauer_eval(n, k, t) == gegenbauer_poly(n, k)(t)


@settings(max_examples=50)
@given(st.integers(3, 60), degrees, st.floats(-1, 1))
def test_matches_scipy(n, k, t):
    assert gegenbauer_float(n, k, t) == pytest.approx(gegenbauer_scipy(n, k, t), abs=1e-10)


@pytest.mark.parametrize("n", [3, 5, 8])
def test_orthogonality(n):
    def w(t):
        return (1 - t * t) ** ((n - 3) / 2)

    for i in range(5):
        for j in range(i + 1, 5):
            val, _ = integrate.quad(
                lambda t: gegenbauer_float(n, i, t) * gegenbauer_float(n, j, t) * w(t), -1, 1)
            assert abs(val) < 1e-9


@given(st.integers(2, 40), st.lists(st.fractions(-5, 5, max_denominator=9), max_size=8))
def test_expand_roundtrip(n, cs):
    f = UniPoly(tuple(cs))
    exp = gegenbauer_expand(n, f)
    assert exp.recombine() == f


def test_expand_basis_element():
    exp = gegenbauer_expand(9, gegenbauer_poly(9, 3))
    assert exp.coeffs == (0, 0, 0, 1)
    assert exp[7] == 0


def test_concurrent_cache_fill():
    results = {}

    def work(i):
        results[i] = gegenbauer_poly(123, 20)

    threads = [threading.Thread(target=work, args=(i,)) for i in range(8)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    assert len({r for r in results.values()}) == 1
    assert results[0](1) == 1
