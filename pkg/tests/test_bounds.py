from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from eqlines.bounds import (
    AngleCandidate,
    BoundValue,
    LPHypothesisError,
    NoQualifyingDegreeError,
    candidate_angles,
    g_bound,
    gerzon,
    harmonic4_polynomial,
    harmonic_index4_bound,
    lemmens_seidel_third,
    lp_delsarte,
    relative_bound,
)
from eqlines.gegenbauer import gegenbauer_eval, gegenbauer_expand
from eqlines.numerics import T, UniPoly


def test_gerzon():
    assert gerzon(23) == 276
    assert gerzon(47) == 1128
    with pytest.raises(ValueError):
        gerzon(1)


def test_relative_bound():
    assert relative_bound(23, Fraction(1, 5)) == 276
    assert relative_bound(7, Fraction(1, 3)) == 28
    assert relative_bound(47, Fraction(1, 7)) == 1128
    assert relative_bound(25, Fraction(1, 5)) is None


def test_lemmens_seidel_third():
    assert lemmens_seidel_third(40) == 78
    with pytest.raises(ValueError):
        lemmens_seidel_third(15)


@pytest.mark.parametrize("n,ks", [(15, [2, 3]), (24, [2, 3]), (40, [2, 3, 4]), (41, [2, 3, 4, 5]),
                                  (60, [2, 3, 4, 5]), (61, [2, 3, 4, 5, 6]), (139, list(range(2, 9)))])
def test_candidate_angles(n, ks):
    assert [c.k for c in candidate_angles(n)] == ks


@given(st.integers(15, 5000))
def test_candidate_angles_condition(n):
    ks = [c.k for c in candidate_angles(n)]
    assert all((2 * k - 1) ** 2 <= 2 * n for k in ks)
    assert (2 * (ks[-1] + 1) - 1) ** 2 > 2 * n


def test_candidate_guards():
    with pytest.raises(ValueError):
        candidate_angles(14)
    with pytest.raises(ValueError):
        AngleCandidate(1)
    assert AngleCandidate(3).a == Fraction(1, 5)


def test_bound_value_validation():
    assert BoundValue(276, "sdp").value == 276
    with pytest.raises(ValueError):
        BoundValue(3, "magic")
    with pytest.raises(ValueError):
        BoundValue(0, "sdp")


def test_g_bound_71():
    assert g_bound(71, Fraction(1, 5), 100) == (876, 4)


def test_g_bound_errors():
    # a = 0 gives G_k(0) of sign (-1)^(k/2); degree 2 alone qualifies
    assert g_bound(5, 0, 2) == (Fraction(5), 2)
    with pytest.raises(NoQualifyingDegreeError):
        g_bound(5, Fraction(9, 10), 2)
    with pytest.raises(ValueError):
        g_bound(5, Fraction(1, 5), 3)


@given(st.integers(3, 60), st.sampled_from([Fraction(1, 3), Fraction(1, 5), Fraction(1, 7)]))
def test_g_bound_is_minimum(n, a):
    try:
        val, k = g_bound(n, a, 20)
    except NoQualifyingDegreeError:
        return
    assert gegenbauer_eval(n, k, a) < 0
    for j in range(2, 21, 2):
        g = gegenbauer_eval(n, j, a)
        if g < 0:
            assert val <= 1 + 1 / -g


def test_lp_simplex_example():
    # f = (t + 1/2) on T = {-1/2} in R^2: three lines at 120 degrees give 3 points
    f = T + Fraction(1, 2)
    assert lp_delsarte(2, [Fraction(-1, 2)], f) == 3


def test_lp_hypotheses_checked():
    with pytest.raises(LPHypothesisError, match="f_0"):
        lp_delsarte(3, [], T)
    with pytest.raises(LPHypothesisError, match="f_1"):
        lp_delsarte(3, [], 1 - T)
    with pytest.raises(LPHypothesisError, match="<= 0"):
        lp_delsarte(3, [Fraction(1, 2)], 1 + T)


@pytest.mark.parametrize("k,expected", [(3, 876), (4, 3480), (5, 9640)])
def test_harmonic_index4(k, expected):
    n, a, f, bound = harmonic_index4_bound(k)
    assert bound == expected
    assert n == 3 * (2 * k - 1) ** 2 - 4


@pytest.mark.parametrize("k", [2, 3, 10, 54])
def test_harmonic4_expansion(k):
    a = Fraction(1, 2 * k - 1)
    n = 3 * (2 * k - 1) ** 2 - 4
    exp = gegenbauer_expand(n, harmonic4_polynomial(n, a))
    assert exp[0] == Fraction(8 * k * (k - 1), (2 * k - 1) ** 4 * (12 * k * k - 12 * k + 1))
    assert exp[1] == exp[2] == exp[3] == 0
    assert exp[4] > 0
    assert harmonic4_polynomial(n, a)(a) == 0


def test_harmonic_index4_guard():
    with pytest.raises(ValueError):
        harmonic_index4_bound(1)
