"""Gegenbauer polynomials G_k^(n) normalized so that G_k(1) = 1.

The family is generated by the three-term recursion

    G_0 = 1,  G_1 = t,
    G_k = ((2k + n - 4) t G_{k-1} - (k - 1) G_{k-2}) / (k + n - 3),

and everything here is kept in exact rational arithmetic.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction

from eqlines.numerics import T, RationalLike, UniPoly, as_rational

_cache: dict[tuple[int, int], UniPoly] = {}
_lock = threading.Lock()


def _check_dim(n: int) -> None:
    if n < 2:
        raise ValueError(f"Gegenbauer dimension must be >= 2, got {n}")


def gegenbauer_poly(n: int, k: int) -> UniPoly:
    """Return G_k^(n) with exact rational coefficients (memoized)."""
    _check_dim(n)
    if k < 0:
        raise ValueError(f"degree must be >= 0, got {k}")
    hit = _cache.get((n, k))
    if hit is not None:
        return hit
    # Walk up from the highest cached degree; entries are deterministic so
    # racing writers store identical values.
    prev2, prev1 = UniPoly.constant(1), T
    start = 2
    for j in range(k, 1, -1):
        if (n, j) in _cache and (n, j - 1) in _cache:
            prev2, prev1 = _cache[(n, j - 1)], _cache[(n, j)]
            start = j + 1
            break
    with _lock:
        _cache.setdefault((n, 0), UniPoly.constant(1))
        _cache.setdefault((n, 1), T)
    for j in range(start, k + 1):
        g = (T * prev1 * (2 * j + n - 4) - prev2 * (j - 1)) * Fraction(1, j + n - 3)
        with _lock:
            _cache.setdefault((n, j), g)
        prev2, prev1 = prev1, g
    return _cache[(n, k)]


def gegenbauer_eval(n: int, k: int, t: RationalLike) -> Fraction:
    """Exact G_k^(n)(t), running the recursion on values instead of polynomials."""
    _check_dim(n)
    if k < 0:
        raise ValueError(f"degree must be >= 0, got {k}")
    t = as_rational(t)
    if (n, k) in _cache:
        return _cache[(n, k)](t)
    if k == 0:
        return Fraction(1)
    a, b = Fraction(1), t
    for j in range(2, k + 1):
        a, b = b, ((2 * j + n - 4) * t * b - (j - 1) * a) / (j + n - 3)
    return b


def gegenbauer_float(n: int, k: int, t: float) -> float:
    """Float evaluation by running the recursion on the value itself."""
    _check_dim(n)
    if k == 0:
        return 1.0
    a, b = 1.0, float(t)
    for j in range(2, k + 1):
        a, b = b, ((2 * j + n - 4) * t * b - (j - 1) * a) / (j + n - 3)
    return b


@dataclass(frozen=True)
class GegenbauerExpansion:
    """Coefficients f_0..f_d with f = sum_k f_k G_k^(n)."""

    n: int
    coeffs: tuple[Fraction, ...]

    def __getitem__(self, k: int) -> Fraction:
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else Fraction(0)

    def recombine(self) -> UniPoly:
        out = UniPoly()
        for k, c in enumerate(self.coeffs):
            if c:
                out = out + gegenbauer_poly(self.n, k) * c
        return out


def gegenbauer_expand(n: int, f: UniPoly) -> GegenbauerExpansion:
    """Expand ``f`` in the G^(n) basis by repeatedly cancelling the top term."""
    _check_dim(n)
    if f.is_zero():
        return GegenbauerExpansion(n, ())
    d = int(f.degree)
    coeffs = [Fraction(0)] * (d + 1)
    rest = f
    for k in range(d, -1, -1):
        top = rest.coeff(k)
        if top == 0:
            continue
        g = gegenbauer_poly(n, k)
        c = top / g.leading
        coeffs[k] = c
        rest = rest - g * c
    assert rest.is_zero()
    return GegenbauerExpansion(n, tuple(coeffs))


def g4_closed_form(n: int) -> UniPoly:
    """G_4^(n)(x) = ((n+2)(n+4) x^4 - 6(n+2) x^2 + 3) / (n^2 - 1)."""
    _check_dim(n)
    den = Fraction(1, n * n - 1)
    return UniPoly((3 * den, 0, -6 * (n + 2) * den, 0, (n + 2) * (n + 4) * den))
