"""Exact scalars, univariate polynomials and small symmetric matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

Rational = Fraction
RationalLike = Union[Fraction, int, str]

#: Degree reported for the zero polynomial.
ZERO_DEGREE = -math.inf


def as_rational(value: RationalLike) -> Fraction:
    """Coerce ints, Fractions and strings such as ``"1/5"`` to a Fraction.

    Floats are rejected: silently turning 0.2 into 3602879701896397/2**54
    is never what a caller of the exact layer wants.
    """
    if isinstance(value, float):
        raise TypeError(f"refusing float {value!r}; pass a Fraction or 'p/q' string")
    return Fraction(value)


@dataclass(frozen=True)
class UniPoly:
    """Polynomial with rational coefficients, ``coeffs[i]`` multiplies t**i.

    Trailing zeros are stripped on construction, so the zero polynomial is
    the empty tuple.
    """

    coeffs: tuple[Fraction, ...] = ()

    def __post_init__(self):
        cs = [Fraction(c) for c in self.coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    @classmethod
    def constant(cls, c: RationalLike) -> "UniPoly":
        return cls((as_rational(c),))

    @classmethod
    def monomial(cls, degree: int, c: RationalLike = 1) -> "UniPoly":
        return cls((Fraction(0),) * degree + (as_rational(c),))

    @property
    def degree(self) -> Union[int, float]:
        return len(self.coeffs) - 1 if self.coeffs else ZERO_DEGREE

    @property
    def leading(self) -> Fraction:
        return self.coeffs[-1] if self.coeffs else Fraction(0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def coeff(self, i: int) -> Fraction:
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else Fraction(0)

    def __call__(self, t: RationalLike) -> Fraction:
        return poly_eval(self, as_rational(t))

    def __add__(self, other: "UniPoly") -> "UniPoly":
        if not isinstance(other, UniPoly):
            other = UniPoly.constant(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return UniPoly(tuple(self.coeff(i) + other.coeff(i) for i in range(n)))

    __radd__ = __add__

    def __neg__(self) -> "UniPoly":
        return UniPoly(tuple(-c for c in self.coeffs))

    def __sub__(self, other: "UniPoly") -> "UniPoly":
        if not isinstance(other, UniPoly):
            other = UniPoly.constant(other)
        return self + (-other)

    def __rsub__(self, other) -> "UniPoly":
        return (-self) + other

    def __mul__(self, other) -> "UniPoly":
        if not isinstance(other, UniPoly):
            c = as_rational(other)
            return UniPoly(tuple(c * a for a in self.coeffs))
        if self.is_zero() or other.is_zero():
            return UniPoly()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return UniPoly(tuple(out))

    __rmul__ = __mul__

    def __repr__(self) -> str:
        if self.is_zero():
            return "UniPoly(0)"
        terms = [f"({c})*t^{i}" for i, c in enumerate(self.coeffs) if c != 0]
        return "UniPoly(" + " + ".join(terms) + ")"


T = UniPoly((Fraction(0), Fraction(1)))


def poly_eval(f: UniPoly, t: Fraction) -> Fraction:
    """Horner evaluation, exact."""
    acc = Fraction(0)
    for c in reversed(f.coeffs):
        acc = acc * t + c
    return acc


@dataclass(frozen=True)
class SymMatrixExact:
    """Symmetric rational matrix stored as a full tuple of row tuples."""

    rows: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(Fraction(v) for v in r) for r in self.rows)
        d = len(rows)
        if d == 0 or any(len(r) != d for r in rows):
            raise ValueError("matrix must be square with dim >= 1")
        for i in range(d):
            for j in range(i + 1, d):
                if rows[i][j] != rows[j][i]:
                    raise ValueError(f"not symmetric at ({i},{j})")
        object.__setattr__(self, "rows", rows)

    @property
    def dim(self) -> int:
        return len(self.rows)

    @classmethod
    def zeros(cls, dim: int) -> "SymMatrixExact":
        return cls(tuple((Fraction(0),) * dim for _ in range(dim)))

    @classmethod
    def identity(cls, dim: int) -> "SymMatrixExact":
        return cls(tuple(tuple(Fraction(int(i == j)) for j in range(dim)) for i in range(dim)))

    @classmethod
    def diagonal(cls, values: Sequence[RationalLike]) -> "SymMatrixExact":
        d = len(values)
        return cls(tuple(tuple(as_rational(values[i]) if i == j else Fraction(0)
                               for j in range(d)) for i in range(d)))

    def __getitem__(self, ij: tuple[int, int]) -> Fraction:
        i, j = ij
        return self.rows[i][j]

    def is_zero(self) -> bool:
        return all(v == 0 for r in self.rows for v in r)

    def is_diagonal(self) -> bool:
        return all(v == 0 for i, r in enumerate(self.rows) for j, v in enumerate(r) if i != j)

    def to_float(self) -> "SymMatrixFloat":
        return SymMatrixFloat(np.array([[float(v) for v in r] for r in self.rows]))


class SymMatrixFloat:
    """Dense float symmetric matrix; the lower triangle is mirrored from the upper."""

    __slots__ = ("_m",)

    def __init__(self, m: Union[np.ndarray, Iterable[Iterable[float]]]):
        a = np.array(m, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise ValueError(f"need a non-empty square matrix, got shape {a.shape}")
        upper = np.triu(a)
        a = upper + np.triu(a, 1).T
        a.setflags(write=False)
        self._m = a

    @property
    def dim(self) -> int:
        return self._m.shape[0]

    @property
    def array(self) -> np.ndarray:
        return self._m

    def __repr__(self) -> str:
        return f"SymMatrixFloat({self._m.tolist()!r})"


def psd_check(m: Union[SymMatrixFloat, np.ndarray], tol: float = 0.0) -> tuple[bool, float]:
    """Return ``(min_eig >= -tol, min_eig)`` for a symmetric matrix."""
    if not isinstance(m, SymMatrixFloat):
        m = SymMatrixFloat(m)
    lam = float(np.linalg.eigvalsh(m.array)[0])
    return lam >= -tol, lam


def is_psd_exact(m: SymMatrixExact) -> bool:
    """Exact semidefiniteness test by symmetric Gaussian elimination.

    A zero pivot is allowed only when its whole row is zero.
    """
    a = [list(r) for r in m.rows]
    d = len(a)
    for i in range(d):
        piv = a[i][i]
        if piv < 0:
            return False
        if piv == 0:
            if any(a[i][j] != 0 for j in range(i + 1, d)):
                return False
            continue
        for r in range(i + 1, d):
            f = a[r][i] / piv
            if f:
                for c in range(i + 1, d):
                    a[r][c] -= f * a[i][c]
    return True
