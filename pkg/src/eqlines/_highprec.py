"""Extended-precision fallback for :mod:`eqlines.sdp_solver`.

The same homogeneous self-dual method with Nesterov-Todd scaling and
Mehrotra steps as the double-precision code, carried out on numpy object
arrays of ``gmpy2.mpfr``. Blocks are restricted exactly to the common range
of their coefficient matrices first, so they are tiny and each iteration
costs only a few thousand multiprecision operations.

Near 1e-8 relative gap the optimal faces of the equiangular-line programs
leave double precision without enough digits; this path is used when the
double-precision solver stalls.
"""

from __future__ import annotations

import math
from fractions import Fraction

import gmpy2
import numpy as np

DENSE, DIAG = "dense", "diag"

#: Working precision in bits (about 38 decimal digits).
PRECISION = 128


def _mpf(v) -> gmpy2.mpfr:
    if isinstance(v, Fraction):
        return gmpy2.mpfr(gmpy2.mpq(v.numerator, v.denominator))
    return gmpy2.mpfr(v)


def _arr(rows) -> np.ndarray:
    return np.array([[_mpf(v) for v in r] for r in rows], dtype=object)


# --- small dense kernels --------------------------------------------------------


def _cholesky(a: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    L = np.full((n, n), gmpy2.mpfr(0), dtype=object)
    for j in range(n):
        d = a[j, j] - sum(L[j, :j] * L[j, :j])
        if d <= 0:
            raise ArithmeticError("matrix is not positive definite")
        L[j, j] = gmpy2.sqrt(d)
        for i in range(j + 1, n):
            L[i, j] = (a[i, j] - sum(L[i, :j] * L[j, :j])) / L[j, j]
    return L


def _eigh(a: np.ndarray, vectors: bool = True):
    """Cyclic Jacobi eigen-decomposition of a small symmetric matrix, ascending."""
    a = a.copy()
    n = a.shape[0]
    V = np.array([[gmpy2.mpfr(int(i == j)) for j in range(n)] for i in range(n)], dtype=object)
    eps = gmpy2.mpfr(2) ** (-gmpy2.get_context().precision)
    for _ in range(60):
        off = sum(a[i, j] * a[i, j] for i in range(n) for j in range(i + 1, n))
        if off == 0:
            break
        diag = sum(a[i, i] * a[i, i] for i in range(n))
        if off <= eps * eps * (diag + off):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if a[p, q] == 0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2 * a[p, q])
                t = 1 / (abs(theta) + gmpy2.sqrt(theta * theta + 1))
                if theta < 0:
                    t = -t
                c = 1 / gmpy2.sqrt(t * t + 1)
                s = t * c
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p], a[:, q] = c * ap - s * aq, s * ap + c * aq
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :], a[q, :] = c * ap - s * aq, s * ap + c * aq
                if vectors:
                    vp, vq = V[:, p].copy(), V[:, q].copy()
                    V[:, p], V[:, q] = c * vp - s * vq, s * vp + c * vq
    w = [a[i, i] for i in range(n)]
    order = sorted(range(n), key=lambda i: w[i])
    return np.array([w[i] for i in order], dtype=object), V[:, order]


def _min_eig(a: np.ndarray):
    if a.ndim == 1:
        return min(a)
    if a.shape[0] == 1:
        return a[0, 0]
    w, _ = _eigh((a + a.T) / 2, vectors=False)
    return w[0]


def _chol_solve(L, b):
    n = len(b)
    y = [None] * n
    for i in range(n):
        y[i] = (b[i] - sum(L[i, k] * y[k] for k in range(i))) / L[i, i]
    x = [None] * n
    for i in reversed(range(n)):
        x[i] = (y[i] - sum(L[k, i] * x[k] for k in range(i + 1, n))) / L[i, i]
    return np.array(x, dtype=object)


# --- exact preprocessing ----------------------------------------------------------


def _range_basis(mats) -> list[list[Fraction]]:
    """Rational basis of the joint column space of the matrices."""
    d = mats[0].dim
    basis: list[list[Fraction]] = []
    pivots: list[int] = []
    for m in mats:
        for j in range(d):
            v = [m[i, j] for i in range(d)]
            for b, p in zip(basis, pivots):
                if v[p]:
                    f = v[p] / b[p]
                    v = [x - f * y for x, y in zip(v, b)]
            nz = next((i for i, x in enumerate(v) if x), None)
            if nz is not None:
                basis.append(v)
                pivots.append(nz)
    return basis


def _orthonormal(basis: list[list[Fraction]], d: int) -> np.ndarray:
    """Gram-Schmidt (twice) in working precision; columns span ``basis``."""
    cols = []
    for b in basis:
        v = np.array([_mpf(x) for x in b], dtype=object)
        for _ in range(2):
            for q in cols:
                v = v - np.sum(q * v) * q
        v = v / gmpy2.sqrt(np.sum(v * v))
        cols.append(v)
    return np.array([[col[i] for col in cols] for i in range(d)], dtype=object)


# --- cones ------------------------------------------------------------------------


class _Dense:
    def __init__(self, mats):
        self.A = mats
        self.d = mats[0].shape[0]

    def G(self, x):
        return -sum(a * xj for a, xj in zip(self.A[1:], x))

    def Gt(self, z):
        return [-np.sum(a * z) for a in self.A[1:]]

    def inner(self, u, v):
        return np.sum(u * v)

    def identity(self):
        return np.array([[gmpy2.mpfr(int(i == j)) for j in range(self.d)]
                         for i in range(self.d)], dtype=object)

    def scale(self, s, z):
        """NT scaling from s and z: R'zR = R^{-1} s R^{-T} = diag(lam)."""
        Ls = _cholesky((s + s.T) / 2)
        Lz = _cholesky((z + z.T) / 2)
        M = Lz.T.dot(Ls)
        w, V = _eigh(M.T.dot(M))
        if w[0] <= 0:
            raise ArithmeticError("scaling matrix is singular")
        lam = np.array([gmpy2.sqrt(v) for v in w], dtype=object)
        r = np.array([1 / gmpy2.sqrt(v) for v in lam], dtype=object)
        U = M.dot(V) / lam[None, :]
        self.R = Ls.dot(V) * r[None, :]
        self.Rinv = r[:, None] * U.T.dot(Lz.T)
        self.lam = lam
        self.q = self.Rinv.T.dot(self.Rinv)

    def W(self, z):
        return self.R.T.dot(z).dot(self.R)

    def Wt(self, u):
        return self.R.dot(u).dot(self.R.T)

    def Hinv(self, u):
        return self.q.dot(u).dot(self.q)

    def lam_sq(self):
        out = self.identity()
        for i in range(self.d):
            out[i, i] = self.lam[i] * self.lam[i]
        return out

    def lam_solve(self, d):
        return 2 * d / (self.lam[:, None] + self.lam[None, :])

    def jordan(self, u, v):
        p = u.dot(v)
        return (p + p.T) / 2

    def max_step(self, dv):
        r = np.array([1 / gmpy2.sqrt(v) for v in self.lam], dtype=object)
        y = r[:, None] * ((dv + dv.T) / 2) * r[None, :]
        e = _min_eig(y)
        return -1 / e if e < 0 else math.inf

    def min_eig(self, m):
        return _min_eig(m)


class _Diag:
    def __init__(self, mats):
        self.A = mats
        self.d = mats[0].shape[0]

    def G(self, x):
        return -sum(a * xj for a, xj in zip(self.A[1:], x))

    def Gt(self, z):
        return [-np.sum(a * z) for a in self.A[1:]]

    def inner(self, u, v):
        return np.sum(u * v)

    def identity(self):
        return np.array([gmpy2.mpfr(1)] * self.d, dtype=object)

    def scale(self, s, z):
        self.w = np.array([gmpy2.sqrt(a / b) for a, b in zip(s, z)], dtype=object)
        self.lam = np.array([gmpy2.sqrt(a * b) for a, b in zip(s, z)], dtype=object)

    def W(self, z):
        return self.w * z

    Wt = W

    def Hinv(self, u):
        return u / (self.w * self.w)

    def lam_sq(self):
        return self.lam * self.lam

    def lam_solve(self, d):
        return d / self.lam

    def jordan(self, u, v):
        return u * v

    def max_step(self, dv):
        neg = [-l / v for l, v in zip(self.lam, dv) if v < 0]
        return min(neg) if neg else math.inf

    def min_eig(self, m):
        return min(m)


# --- driver -----------------------------------------------------------------------


def build_cones(blocks, d):
    """Exact range reduction plus column scaling by ``d`` (positive numbers).

    ``blocks`` is a list of (kind, exact matrices). Returns (cones, maps); a map
    entry lifts a reduced dual block back to full coordinates.
    """
    with gmpy2.context(gmpy2.get_context(), precision=PRECISION):
        dq = [_mpf(v) for v in d]
        cones, maps = [], []
        for kind, mats in blocks:
            dim = mats[0].dim
            if kind == DENSE:
                basis = _range_basis(mats)
                if not basis:
                    maps.append(("drop", dim))
                    continue
                Q = _orthonormal(basis, dim)
                red = [Q.T.dot(_arr(m.rows)).dot(Q) for m in mats]
                red = [red[0]] + [a * dj for a, dj in zip(red[1:], dq)]
                cones.append(_Dense(red))
                maps.append(("dense", Q))
            else:
                keep = [i for i in range(dim) if any(m[i, i] for m in mats)]
                if not keep:
                    maps.append(("drop", dim))
                    continue
                vecs = [np.array([_mpf(m[i, i]) for i in keep], dtype=object) for m in mats]
                vecs = [vecs[0]] + [v * dj for v, dj in zip(vecs[1:], dq)]
                cones.append(_Diag(vecs))
                maps.append(("diag", (keep, dim)))
    return cones, maps


def lift(z, maps) -> list[np.ndarray]:
    """Reduced dual blocks -> float blocks in the original coordinates."""
    out, it = [], iter(z)
    for kind, info in maps:
        if kind == "drop":
            out.append(np.zeros(info))
        elif kind == "dense":
            full = info.dot(next(it)).dot(info.T)
            out.append(np.array(full, dtype=float))
        else:
            keep, dim = info
            full = np.zeros(dim)
            full[keep] = np.array(next(it), dtype=float)
            out.append(full)
    return out


def run(cones, c, const, gap_tol, feas_tol, max_iter, step_fraction, log=None,
        refine_gap=None) -> dict:
    """Solve in working precision; the result mirrors the double-precision run.

    With ``refine_gap`` set, iteration continues past the tolerances until the
    relative gap drops below it or stops improving.
    """
    with gmpy2.context(gmpy2.get_context(), precision=PRECISION):
        return _run(cones, c, const, gap_tol, feas_tol, max_iter, step_fraction, log, refine_gap)


def _run(cones, c, const, gap_tol, feas_tol, max_iter, step_fraction, log, refine_gap):
    m = len(c)
    c = np.array([_mpf(v) for v in c], dtype=object)
    const = _mpf(const)
    hs = [k.A[0] for k in cones]
    deg = sum(k.d for k in cones)
    dual_tol = math.sqrt(feas_tol)
    target = gap_tol if refine_gap is None else min(gap_tol, refine_gap)
    one = gmpy2.mpfr(1)

    def G(x):
        return [k.G(x) for k in cones]

    def Gt(zs):
        out = np.array([gmpy2.mpfr(0)] * m, dtype=object)
        for k, z in zip(cones, zs):
            out = out + np.array(k.Gt(z), dtype=object)
        return out

    def inner(us, vs):
        return sum(k.inner(u, v) for k, u, v in zip(cones, us, vs))

    def norm(us):
        return gmpy2.sqrt(inner(us, us))

    def vnorm(v):
        return gmpy2.sqrt(np.sum(v * v))

    hnorm = max(one, norm(hs))
    cnorm = max(one, vnorm(c))

    x = np.array([gmpy2.mpfr(0)] * m, dtype=object)
    s = [k.identity() for k in cones]
    z = [k.identity() for k in cones]
    tau = kappa = one

    # best: lowest merit against the refined gap target; last_ok: latest
    # iterate meeting the requested tolerances
    best, best_tight, best_it, last_ok = None, math.inf, 0, None
    it = 0
    for it in range(max_iter + 1):
        rx = Gt(z) + c * tau
        rz = [sv + gv - hv * tau for sv, gv, hv in zip(s, G(x), hs)]
        cx = np.sum(c * x)
        hz = inner(hs, z)
        rt = kappa + cx + hz
        sz = inner(s, z)
        mu = (sz + tau * kappa) / (deg + 1)

        pres = norm(rz) / tau / hnorm
        dres = vnorm(rx) / tau / cnorm
        primal = const - cx / tau
        dual = const + hz / tau
        gap = max(sz / tau**2, abs(dual - primal))
        rel_gap = gap / (1 + abs(primal))
        feas = max(pres / feas_tol, dres / dual_tol)
        merit = float(max(feas, rel_gap / gap_tol))
        tight = float(max(feas, rel_gap / target))
        if log:
            log("hp it=%d primal=%.15g pres=%.2e dres=%.2e relgap=%.2e"
                % (it, float(primal), float(pres), float(dres), float(rel_gap)))
        snap = None
        if merit <= 1.0:
            xs = x / tau
            if all(k.min_eig(h - k.G(xs)) >= -feas_tol for k, h in zip(cones, hs)):
                snap = last_ok = (xs, primal, dual, gap, [v / tau for v in z], merit, True)
        if tight < best_tight:
            best_tight, best_it = tight, it
            best = snap or (x / tau, primal, dual, gap, [v / tau for v in z], merit, False)
        if last_ok is not None and tight <= 1.0:
            break
        if it == max_iter or it - best_it >= 15:
            break

        try:
            for k, sv, zv in zip(cones, s, z):
                k.scale(sv, zv)
            lam_sq = [k.lam_sq() for k in cones]
            hA = [[k.Hinv(a) for a in k.A[1:]] for k in cones]
            M = np.empty((m, m), dtype=object)
            for i in range(m):
                for j in range(i, m):
                    M[i, j] = M[j, i] = sum(k.inner(k.A[i + 1], ha[j]) for k, ha in zip(cones, hA))
            Lm = _cholesky(M)
        except (ArithmeticError, ZeroDivisionError):
            break

        def solve_kkt(bx, bz):
            hbz = [k.Hinv(b) for k, b in zip(cones, bz)]
            dx = _chol_solve(Lm, bx + Gt(hbz))
            dz = [k.Hinv(k.G(dx) - b) for k, b in zip(cones, bz)]
            return dx, dz

        x1, z1 = solve_kkt(-c, hs)

        def direction(gamma, ds_rhs, dk_rhs):
            ds_t = [k.lam_solve(dd) for k, dd in zip(cones, ds_rhs)]
            bx = -(1 - gamma) * rx
            bz = [-(1 - gamma) * r - k.Wt(dd) for k, r, dd in zip(cones, rz, ds_t)]
            x2, z2 = solve_kkt(bx, bz)
            num = -(1 - gamma) * rt - np.sum(c * x2) - inner(hs, z2) - dk_rhs / tau
            den = np.sum(c * x1) + inner(hs, z1) - kappa / tau
            dtau = num / den
            dx = x2 + dtau * x1
            dz = [a + dtau * b for a, b in zip(z2, z1)]
            dkap = (dk_rhs - kappa * dtau) / tau
            dz_t = [k.W(v) for k, v in zip(cones, dz)]
            ds_t = [a - b for a, b in zip(ds_t, dz_t)]
            ds = [-(1 - gamma) * r - g + h * dtau for r, g, h in zip(rz, G(dx), hs)]
            return dx, ds, dz, dtau, dkap, ds_t, dz_t

        def step(ds_t, dz_t, dtau, dkap):
            a = math.inf
            for k, u, v in zip(cones, ds_t, dz_t):
                a = min(a, k.max_step(u), k.max_step(v))
            if dtau < 0:
                a = min(a, -tau / dtau)
            if dkap < 0:
                a = min(a, -kappa / dkap)
            return a

        _, _, _, dtau_a, dkap_a, dst_a, dzt_a = direction(0, [-v for v in lam_sq], -tau * kappa)
        alpha_a = min(one, step(dst_a, dzt_a, dtau_a, dkap_a))
        sigma = (1 - alpha_a) ** 3
        ds_rhs = [-l2 + sigma * mu * k.identity() - k.jordan(u, v)
                  for k, l2, u, v in zip(cones, lam_sq, dst_a, dzt_a)]
        dk_rhs = -tau * kappa + sigma * mu - dtau_a * dkap_a
        dx, ds, dz, dtau, dkap, dst, dzt = direction(sigma, ds_rhs, dk_rhs)
        alpha = min(one, step_fraction * step(dst, dzt, dtau, dkap))

        x = x + alpha * dx
        tau = tau + alpha * dtau
        kappa = kappa + alpha * dkap
        s = [a + alpha * b for a, b in zip(s, ds)]
        z = [a + alpha * b for a, b in zip(z, dz)]

    if not best[-1] and last_ok is not None:
        best = last_ok
    xs, primal, dual, gap, zs, merit, ok = best
    return dict(x=[float(v) for v in xs], primal=float(primal), dual=float(dual),
                gap=float(gap), status="optimal" if ok else "max_iter_reached",
                iterations=it, merit=merit, z=zs)
