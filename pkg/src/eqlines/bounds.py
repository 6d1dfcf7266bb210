"""Closed-form and linear-programming bounds on equiangular line sets."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Union

from eqlines.gegenbauer import gegenbauer_eval, gegenbauer_expand
from eqlines.numerics import T, RationalLike, UniPoly, as_rational

METHODS = ("gerzon", "relative", "ls_third", "delsarte_lp", "harmonic4", "g_min", "sdp")


@dataclass(frozen=True)
class AngleCandidate:
    k: int

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"k must be >= 2, got {self.k}")

    @property
    def a(self) -> Fraction:
        return Fraction(1, 2 * self.k - 1)


@dataclass(frozen=True)
class BoundValue:
    value: Union[Fraction, int]
    method: str

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.value < 1:
            raise ValueError(f"bound {self.value} < 1")


class LPHypothesisError(ValueError):
    """A test polynomial fails one of the LP bound's sign conditions."""

    def __init__(self, condition: str, witness):
        self.condition = condition
        self.witness = witness
        super().__init__(f"{condition} (witness: {witness})")


class NoQualifyingDegreeError(ValueError):
    pass


def gerzon(n: int) -> int:
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    return n * (n + 1) // 2


def relative_bound(n: int, a: RationalLike) -> Optional[Fraction]:
    """n(1 - a^2) / (1 - n a^2), or None when the denominator is not positive."""
    a = as_rational(a)
    den = 1 - n * a * a
    if den <= 0:
        return None
    return n * (1 - a * a) / den


def lemmens_seidel_third(n: int) -> int:
    """Upper bound 2(n - 1) on sets with angle arccos(1/3), valid for n >= 16."""
    if n < 16:
        raise ValueError(f"bound only holds for n >= 16, got {n}")
    return 2 * (n - 1)


def candidate_angles(n: int) -> list[AngleCandidate]:
    """Angles 1/(2k-1) allowed for sets larger than 2n + 1.

    k runs over 2 <= k <= (1 + sqrt(2n)) / 2, i.e. (2k - 1)^2 <= 2n.
    """
    if n < 15:
        raise ValueError(f"angle restriction is only applied for n >= 15, got {n}")
    kmax = (1 + math.isqrt(2 * n)) // 2
    # isqrt floors; (2k-1)^2 <= 2n  <=>  2k-1 <= isqrt(2n)
    return [AngleCandidate(k) for k in range(2, kmax + 1)]


def lp_delsarte(n: int, T_set: Iterable[RationalLike], f: UniPoly) -> int:
    """floor(f(1) / f_0) after checking the hypotheses exactly.

    Requires f_0 > 0, f_k >= 0 for k >= 1 in the G^(n) expansion, and
    f(t) <= 0 for every t in the finite set ``T_set``.
    """
    exp = gegenbauer_expand(n, f)
    if exp[0] <= 0:
        raise LPHypothesisError("f_0 > 0 fails", exp[0])
    for k in range(1, len(exp.coeffs)):
        if exp[k] < 0:
            raise LPHypothesisError(f"f_{k} >= 0 fails", exp[k])
    for t in T_set:
        t = as_rational(t)
        if f(t) > 0:
            raise LPHypothesisError(f"f({t}) <= 0 fails", f(t))
    return math.floor(f(Fraction(1)) / exp[0])


def harmonic4_polynomial(n: int, a: Fraction) -> UniPoly:
    """(t^2 - a^2)(t^2 + (a^2 n + 4a^2 - 6)/(n + 4))."""
    a2 = a * a
    return (T * T - a2) * (T * T + (a2 * n + 4 * a2 - 6) / (n + 4))


def harmonic_index4_bound(k: int) -> tuple[int, Fraction, UniPoly, Fraction]:
    """LP bound for n = 3(2k-1)^2 - 4 and a = 1/(2k-1); equals (n+1)(n+2)/6."""
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    a = Fraction(1, 2 * k - 1)
    n = 3 * (2 * k - 1) ** 2 - 4
    f = harmonic4_polynomial(n, a)
    lp_delsarte(n, (a, -a), f)
    bound = f(Fraction(1)) / gegenbauer_expand(n, f)[0]
    if bound != Fraction((n + 1) * (n + 2), 6):
        raise AssertionError(f"k={k}: LP value {bound} != (n+1)(n+2)/6")
    return n, a, f, bound


def g_bound(n: int, a: RationalLike, k_max: int = 100) -> tuple[Fraction, int]:
    """1 + min over even k in [2, k_max] with G_k(a) < 0 of 1/|G_k(a)|.

    Returns the bound and the minimizing degree (smallest on ties).
    """
    a = as_rational(a)
    if k_max < 2 or k_max % 2:
        raise ValueError(f"k_max must be an even integer >= 2, got {k_max}")
    best = None
    for k in range(2, k_max + 1, 2):
        g = gegenbauer_eval(n, k, a)
        if g < 0:
            val = 1 / -g
            if best is None or val < best[0]:
                best = (val, k)
    if best is None:
        raise NoQualifyingDegreeError(
            f"G_k^({n})({a}) >= 0 for every even k <= {k_max}; the LP is unbounded on this range")
    return best[0] + 1, best[1]
