import dataclasses
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eqlines.numerics import SymMatrixExact
from eqlines.sdp_model import DENSE, DIAG, Block, LinearMatrixProblem, build_equiangular_sdp
from eqlines.sdp_solver import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    SolverSettings,
    check_solution,
    solve,
)

from oracles import cvxopt_solve

A5, A7 = Fraction(1, 5), Fraction(1, 7)
DEFAULT = SolverSettings()


def _rel(a, b):
    return abs(a - b) / (1 + abs(b))


def _diag(vals):
    return SymMatrixExact.diagonal(vals)


def test_settings_validation():
    for kw in ({"gap_tol": 0}, {"feas_tol": -1}, {"max_iter": 0}, {"step_fraction": 1.0},
               {"refine_gap": 0.0}):
        with pytest.raises(ValueError):
            SolverSettings(**kw)


def test_two_by_two_lmi():
    # maximize x s.t. [[1, x], [x, 1]] >= 0
    prob = LinearMatrixProblem(1, Fraction(0), (Fraction(1),), (
        Block(DENSE, (SymMatrixExact.identity(2), SymMatrixExact(((0, 1), (1, 0))))),))
    sol = solve(prob)
    assert sol.status == OPTIMAL
    assert sol.primal_obj == pytest.approx(1.0, abs=1e-9)


def test_infeasible_detected():
    # x >= 1 and x <= 0
    prob = LinearMatrixProblem(1, Fraction(0), (Fraction(1),), (
        Block(DIAG, (_diag([-1, 0]), _diag([1, -1]))),))
    sol = solve(prob)
    assert sol.status == INFEASIBLE
    assert sol.primal_obj == -math.inf


def test_unbounded_detected():
    prob = LinearMatrixProblem(1, Fraction(0), (Fraction(1),), (
        Block(DIAG, (_diag([0]), _diag([1]))),))
    sol = solve(prob)
    assert sol.status == UNBOUNDED
    assert sol.primal_obj == math.inf


def _random_problem(seed, m, dims):
    """A_0 = I plus a box |x_j| <= 2, so the problem is strictly feasible and bounded."""
    rng = np.random.default_rng(seed)
    blocks = []
    for d in dims:
        mats = [SymMatrixExact.identity(d)]
        for _ in range(m):
            r = rng.integers(-4, 5, size=(d, d))
            mats.append(SymMatrixExact(tuple(tuple(Fraction(int(v), 4) for v in row)
                                             for row in (r + r.T))))
        blocks.append(Block(DENSE, tuple(mats)))
    box = [_diag([2] * (2 * m))]
    for j in range(m):
        box.append(_diag([int(i == j) - int(i == m + j) for i in range(2 * m)]))
    blocks.append(Block(DIAG, tuple(box)))
    c = tuple(Fraction(int(v), 3) for v in rng.integers(-3, 4, size=m))
    return LinearMatrixProblem(m, Fraction(0), c, tuple(blocks))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4),
       st.lists(st.integers(1, 4), min_size=1, max_size=3))
def test_random_problems_match_cvxopt(seed, m, dims):
    pytest.importorskip("cvxopt")
    prob = _random_problem(seed, m, dims)
    sol = solve(prob)
    status, ref = cvxopt_solve(prob)
    assert status == "optimal"
    assert sol.status == OPTIMAL
    assert _rel(sol.primal_obj, ref) < 1e-6
    assert check_solution(prob, sol, tol=1e-7).ok


# CVXOPT reaches these; (47, 1/7) and larger angles defeat it
CVX_CASES = [(23, A5), (22, A5), (43, A7), (23, Fraction(1, 3)), (17, A5), (18, A5)]


@pytest.mark.parametrize("n,a", CVX_CASES)
def test_equiangular_matches_cvxopt(n, a):
    pytest.importorskip("cvxopt")
    prob = build_equiangular_sdp(n, a, 5)
    status, ref = cvxopt_solve(prob)
    assert status == "optimal"
    sol = solve(prob)
    assert sol.optimal
    assert _rel(sol.primal_obj, ref) < 1e-5


@pytest.mark.parametrize("n,a,expected", [
    (23, A5, 276), (22, A5, 176), (43, A7, 344), (47, A7, 1128),
    # values frozen from this solver after agreement with CVXOPT to 1e-6
    (17, A5, 51), (23, Fraction(1, 3), 58), (16, A5, Fraction(128, 3)),
])
def test_equiangular_values(n, a, expected):
    sol = solve(build_equiangular_sdp(n, a, 5))
    assert sol.optimal
    assert abs(sol.primal_obj - float(expected)) < 1e-7


@pytest.mark.parametrize("n,a", [(23, A5), (71, A5), (43, A7)])
def test_weak_duality_and_residuals(n, a):
    prob = build_equiangular_sdp(n, a, 5)
    sol = solve(prob)
    assert sol.optimal
    assert sol.dual_obj >= sol.primal_obj - 2 * sol.gap
    assert sol.gap <= DEFAULT.gap_tol * (1 + abs(sol.primal_obj))
    rep = check_solution(prob, sol, tol=DEFAULT.feas_tol)
    assert rep.ok, rep.flagged
    assert rep.objective_error < 1e-9


@pytest.mark.parametrize("n,a", [(23, A5), (43, A7)])
def test_monotone_in_p(n, a):
    vals = [solve(build_equiangular_sdp(n, a, p)).primal_obj for p in (2, 3, 4)]
    for lo, hi in zip(vals[1:], vals):
        assert lo <= hi + 2 * DEFAULT.gap_tol * (1 + abs(hi))


def test_deterministic():
    prob = build_equiangular_sdp(43, A7, 5)
    s1, s2 = solve(prob), solve(prob)
    assert s1.x == s2.x and s1.primal_obj == s2.primal_obj and s1.iterations == s2.iterations


def test_check_solution_flags_perturbation():
    prob = build_equiangular_sdp(71, A5, 5)
    sol = solve(prob)
    bumped = dataclasses.replace(sol, x=(sol.x[0] + 10,) + sol.x[1:])
    rep = check_solution(prob, bumped)
    assert not rep.ok
    assert "moments" in rep.flagged or "linear k=4" in rep.flagged


def test_check_solution_rejects_nonfinite():
    prob = build_equiangular_sdp(23, A5, 2)
    sol = solve(prob)
    with pytest.raises(ValueError):
        check_solution(prob, dataclasses.replace(sol, x=(math.nan,) * 6))


def test_double_precision_only_when_refinement_disabled():
    # without refinement the double-precision answer is still within tolerance
    st_ = SolverSettings(refine_gap=None)
    sol = solve(build_equiangular_sdp(23, A5, 5), st_)
    assert sol.optimal
    assert _rel(sol.primal_obj, 276) < 2 * st_.gap_tol
