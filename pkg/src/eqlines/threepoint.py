"""Three-point kernels Y_k^n(u, v, t) and their symmetrizations S_k^n.

The textbook entry

    u^i v^j ((1-u^2)(1-v^2))^(k/2) G_k^(n-1)((t - uv) / sqrt((1-u^2)(1-v^2)))

is rewritten with the parity of G_k as

    u^i v^j sum_m g_m (t - uv)^m ((1-u^2)(1-v^2))^((k-m)/2),

where only m = k, k-2, ... contribute, so every exponent is a nonnegative
integer. That makes each entry a rational polynomial in (u, v, t), defined
at u = +-1 or v = +-1 as well.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from eqlines.gegenbauer import gegenbauer_float, gegenbauer_poly
from eqlines.numerics import RationalLike, SymMatrixExact, as_rational

DEFAULT_P = 5


@dataclass(frozen=True)
class TriplePoint:
    u: Fraction
    v: Fraction
    t: Fraction

    def __post_init__(self):
        for name in ("u", "v", "t"):
            val = as_rational(getattr(self, name))
            if abs(val) > 1:
                raise ValueError(f"{name}={val} outside [-1, 1]")
            object.__setattr__(self, name, val)

    def permutations(self):
        for u, v, t in itertools.permutations((self.u, self.v, self.t)):
            yield TriplePoint(u, v, t)


@dataclass(frozen=True)
class SMatrix:
    n: int
    p: int
    k: int
    m: SymMatrixExact


def _check(n: int, p: int, k: int) -> None:
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    if not 0 <= k <= p:
        raise ValueError(f"need 0 <= k <= p, got k={k}, p={p}")


def _as_triple(pt) -> TriplePoint:
    if isinstance(pt, TriplePoint):
        return pt
    return TriplePoint(*pt)


def _core(n: int, k: int, u: Fraction, v: Fraction, t: Fraction) -> Fraction:
    g = gegenbauer_poly(n - 1, k).coeffs
    w = (1 - u * u) * (1 - v * v)
    s = t - u * v
    total = Fraction(0)
    for m in range(k, -1, -2):
        if m < len(g) and g[m]:
            total += g[m] * s**m * w ** ((k - m) // 2)
    return total


def y_matrix(n: int, p: int, k: int, pt) -> tuple[tuple[Fraction, ...], ...]:
    """(p-k+1) x (p-k+1) matrix Y_k^n at the triple ``pt`` (not symmetric in general)."""
    _check(n, p, k)
    pt = _as_triple(pt)
    core = _core(n, k, pt.u, pt.v, pt.t)
    d = p - k + 1
    upow = [pt.u**i for i in range(d)]
    vpow = [pt.v**j for j in range(d)]
    return tuple(tuple(upow[i] * vpow[j] * core for j in range(d)) for i in range(d))


@functools.lru_cache(maxsize=4096)
def _s_matrix_cached(n: int, p: int, k: int, pt: TriplePoint) -> SMatrix:
    d = p - k + 1
    acc = [[Fraction(0)] * d for _ in range(d)]
    for perm in pt.permutations():
        y = y_matrix(n, p, k, perm)
        for i in range(d):
            for j in range(d):
                acc[i][j] += y[i][j]
    return SMatrix(n, p, k, SymMatrixExact(tuple(tuple(x / 6 for x in row) for row in acc)))


def s_matrix(n: int, p: int, k: int, pt) -> SMatrix:
    """Average of Y_k^n over the six orderings of the triple."""
    _check(n, p, k)
    return _s_matrix_cached(n, p, k, _as_triple(pt))


def s_matrix_float(n: int, p: int, k: int, u, v, t) -> np.ndarray:
    """Sum of S_k^n over many triples at once; u, v, t are equal-length float arrays.

    Returns the (p-k+1) x (p-k+1) sum, not the average.
    """
    _check(n, p, k)
    g = [float(c) for c in gegenbauer_poly(n - 1, k).coeffs]
    u, v, t = (np.clip(np.asarray(a, dtype=float), -1.0, 1.0) for a in (u, v, t))
    d = p - k + 1
    out = np.zeros((d, d))
    for a, b, c in itertools.permutations((u, v, t)):
        w = np.maximum((1 - a * a) * (1 - b * b), 0.0)
        s = c - a * b
        core = np.zeros_like(a)
        for m in range(k, -1, -2):
            if m < len(g) and g[m]:
                core += g[m] * s**m * w ** ((k - m) // 2)
        apow = np.stack([a**i for i in range(d)])
        bpow = np.stack([b**j for j in range(d)])
        out += (apow * core) @ bpow.T
    out /= 6.0
    return 0.5 * (out + out.T)


def positivity_probe(n: int, points: Sequence[Sequence[float]], k: int,
                     p: int = DEFAULT_P) -> tuple[float, float]:
    """Evaluate the two- and three-point positivity sums on a finite code.

    Returns ``(sum over ordered pairs of G_k^(n)(<x,y>),
    smallest eigenvalue of the sum over ordered triples of S_k^n)``.
    Both should be nonnegative up to rounding for any point set.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim != 2 or X.shape[1] != n:
        raise ValueError(f"expected an (N, {n}) array of points")
    norms = np.linalg.norm(X, axis=1)
    bad = np.flatnonzero(np.abs(norms - 1.0) > 1e-12)
    if bad.size:
        raise ValueError(f"point {bad[0]} is not a unit vector (norm {norms[bad[0]]!r})")
    gram = np.clip(X @ X.T, -1.0, 1.0)
    two_point = float(sum(gegenbauer_float(n, k, x) for x in gram.ravel()))
    N = len(X)
    i, j, l = np.meshgrid(np.arange(N), np.arange(N), np.arange(N), indexing="ij")
    i, j, l = i.ravel(), j.ravel(), l.ravel()
    total = s_matrix_float(n, p, k, gram[i, j], gram[i, l], gram[j, l])
    return two_point, float(np.linalg.eigvalsh(total)[0])
