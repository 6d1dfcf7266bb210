"""Primal-dual interior point solver for small block-diagonal LMI problems.

The maximization problem of :mod:`eqlines.sdp_model` is rewritten as the
conic program

    minimize c'x  s.t.  G x + s = h,  s in K,

with c = -objective, G x = -sum_j x_j A_j, h = A_0, and K a product of PSD
cones (dense blocks) and nonnegative orthants (diagonal blocks). It is solved
on the homogeneous self-dual embedding

    G'z + c tau = 0,   s + G x - h tau = 0,   kappa + c'x + h'z = 0,

which needs no feasible starting point and yields infeasibility certificates
when tau -> 0. Search directions use Nesterov-Todd scaling and a Mehrotra
predictor-corrector; the scaling is updated in factored form. Each block is
first restricted to the common range of its coefficient matrices, removing
directions in which every feasible slack vanishes.

If double precision stalls before the tolerances are met, or cannot push the
gap down to ``refine_gap``, the solve is repeated in extended precision
(:mod:`eqlines._highprec`).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from eqlines import _highprec
from eqlines.sdp_model import DENSE, LinearMatrixProblem

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
MAX_ITER = "max_iter_reached"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL = "numerical_error"


@dataclass(frozen=True)
class SolverSettings:
    gap_tol: float = 1e-8
    feas_tol: float = 1e-9
    max_iter: int = 200
    step_fraction: float = 0.98
    # relative gap the extended-precision stage aims for once the tolerances
    # hold; None stops as soon as they do
    refine_gap: Optional[float] = 1e-12

    def __post_init__(self):
        if self.gap_tol <= 0 or self.feas_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.refine_gap is not None and self.refine_gap <= 0:
            raise ValueError("refine_gap must be positive or None")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0 < self.step_fraction < 1:
            raise ValueError("step_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class SdpSolution:
    x: tuple[float, ...]
    primal_obj: float
    dual_obj: float
    gap: float
    status: str
    iterations: int
    # dual matrices per block (dense: 2-d array, diagonal: 1-d vector)
    z: tuple = field(default=(), repr=False, compare=False)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


# --- cone algebra --------------------------------------------------------------
#
# For a dense block the NT scaling is kept as a pair (R, Rinv) with
#     lam = R' z R = Rinv s Rinv',
# for a diagonal block as a vector w with lam = z * w = s / w.
# The iterates s and z are also kept unscaled, for the residuals. The scaling is
# set from them once and afterwards updated in factored form, which stays
# well defined when s and z are nearly singular.


class _Dense:
    __slots__ = ("A", "d", "R", "Rinv", "lam")

    def __init__(self, mats):
        self.A = mats
        self.d = mats[0].shape[0]

    # linear maps -----------------------------------------------------------
    def G(self, x):
        return -np.tensordot(x, self.A[1:], axes=1)

    def Gt(self, z):
        return -np.array([np.vdot(a, z) for a in self.A[1:]])

    def h(self):
        return self.A[0]

    def inner(self, u, v):
        return float(np.vdot(u, v))

    def identity(self):
        return np.eye(self.d)

    # scaling ---------------------------------------------------------------
    def W(self, z):
        return self.R.T @ z @ self.R

    def Winvt(self, s):
        return self.Rinv @ s @ self.Rinv.T

    def Wt(self, u):
        return self.R @ u @ self.R.T

    def Hinv(self, u):
        q = self.Rinv.T @ self.Rinv
        return q @ u @ q

    def set_scaling(self, s, z):
        self.R, self.Rinv, self.lam = _nt_factor(s, z)

    def update_scaling(self, ds, dz, alpha):
        """Move to lam + alpha*ds, lam + alpha*dz (scaled frame) and refactor."""
        lam = np.diag(self.lam)
        R2, R2inv, self.lam = _nt_factor(lam + alpha * ds, lam + alpha * dz)
        self.R = self.R @ R2
        self.Rinv = R2inv @ self.Rinv

    # Jordan algebra in the scaled frame ------------------------------------
    def lam_sq(self):
        return np.diag(self.lam**2)

    def lam_solve(self, d):
        return 2.0 * d / np.add.outer(self.lam, self.lam)

    def jordan(self, u, v):
        p = u @ v
        return 0.5 * (p + p.T)

    def max_step(self, dv):
        """Largest alpha with lam + alpha*dv PSD, dv given in the scaled frame."""
        r = 1.0 / np.sqrt(self.lam)
        y = r[:, None] * dv * r[None, :]
        e = np.linalg.eigvalsh(0.5 * (y + y.T))[0]
        return -1.0 / e if e < 0 else math.inf

    def min_eig(self, m):
        return float(np.linalg.eigvalsh(0.5 * (m + m.T))[0])


class _Diag:
    __slots__ = ("A", "d", "w", "lam")

    def __init__(self, mats):
        self.A = mats
        self.d = mats[0].shape[0]

    def G(self, x):
        return -np.tensordot(x, self.A[1:], axes=1)

    def Gt(self, z):
        return -np.array([a @ z for a in self.A[1:]])

    def h(self):
        return self.A[0]

    def inner(self, u, v):
        return float(u @ v)

    def identity(self):
        return np.ones(self.d)

    def W(self, z):
        return self.w * z

    def Winvt(self, s):
        return s / self.w

    def Wt(self, u):
        return self.w * u

    def Hinv(self, u):
        return u / self.w**2

    def set_scaling(self, s, z):
        self.w = np.sqrt(s / z)
        self.lam = np.sqrt(s * z)

    def update_scaling(self, ds, dz, alpha):
        s_t = self.lam + alpha * ds
        z_t = self.lam + alpha * dz
        self.w = self.w * np.sqrt(s_t / z_t)
        self.lam = np.sqrt(s_t * z_t)

    def lam_sq(self):
        return self.lam**2

    def lam_solve(self, d):
        return d / self.lam

    def jordan(self, u, v):
        return u * v

    def max_step(self, dv):
        neg = dv < 0
        if not neg.any():
            return math.inf
        return float(np.min(-self.lam[neg] / dv[neg]))

    def min_eig(self, m):
        return float(np.min(m))


def _nt_factor(s, z):
    Ls = np.linalg.cholesky(0.5 * (s + s.T))
    Lz = np.linalg.cholesky(0.5 * (z + z.T))
    U, lam, Vt = np.linalg.svd(Lz.T @ Ls)
    r = 1.0 / np.sqrt(lam)
    R = Ls @ Vt.T * r[None, :]
    Rinv = r[:, None] * (U.T @ Lz.T)
    return R, Rinv, lam


def _common_range(mats, rtol=1e-12):
    """Orthonormal basis of the joint column space of A_0..A_m (dense block).

    If every coefficient matrix vanishes on a subspace, the slack is singular
    there at every feasible point and the block has no interior. Restricting to
    Q' A_j Q removes that face without changing the feasible set.
    """
    U, sv, _ = np.linalg.svd(np.hstack(mats))
    r = int(np.sum(sv > rtol * sv[0])) if sv.size and sv[0] > 0 else 0
    return U[:, :r]


def _make_cones(prob: LinearMatrixProblem):
    """Build cone objects plus, per block, the map back to the original coordinates."""
    cones, maps = [], []
    for b in prob.blocks:
        mats = b.float_mats()
        if b.kind == DENSE:
            Q = _common_range(mats)
            if Q.shape[1] == 0:
                maps.append(("drop", b.dim))
                continue
            cones.append(_Dense([Q.T @ a @ Q for a in mats]))
            maps.append(("dense", Q))
        else:
            keep = np.flatnonzero(np.any(np.stack(mats) != 0, axis=0))
            if keep.size == 0:
                maps.append(("drop", b.dim))
                continue
            cones.append(_Diag([a[keep] for a in mats]))
            maps.append(("diag", (keep, b.dim)))
    return cones, maps


def _lift_duals(zs, maps):
    out, it = [], iter(zs)
    for kind, info in maps:
        if kind == "drop":
            out.append(np.zeros(info))
        elif kind == "dense":
            z = next(it)
            out.append(info @ z @ info.T)
        else:
            keep, d = info
            full = np.zeros(d)
            full[keep] = next(it)
            out.append(full)
    return out


def _shift_into_cone(cone, v):
    """v + (1 + t) e when v is not strictly interior (t = -min eig)."""
    t = -cone.min_eig(v)
    return v if t < 0 else v + (1.0 + t) * cone.identity()


# --- main loop -----------------------------------------------------------------


def solve(prob: LinearMatrixProblem, settings: SolverSettings = SolverSettings()) -> SdpSolution:
    """Maximize the problem objective; see the module docstring for the method.

    A double-precision run comes first. If it stalls short of the tolerances,
    or meets them with a gap above ``settings.refine_gap``, the problem is
    solved again in extended precision and the better result is kept.
    """
    if not prob.blocks:
        raise ValueError("problem has no blocks")
    cones, maps = _make_cones(prob)
    if not cones:
        raise ValueError("every block is identically zero")
    c = -np.array([float(v) for v in prob.objective_coeffs])
    const = float(prob.objective_constant)

    run = _run(cones, c, const, settings)
    zs = _lift_duals(run.z, maps)
    refine = settings.refine_gap
    coarse = refine is not None and run.gap > refine * (1 + abs(run.primal))
    if run.status in (MAX_ITER, NUMERICAL) or (run.status == OPTIMAL and coarse):
        hp_cones, hp_maps = _highprec.build_cones(
            [(b.kind, list(b.mats)) for b in prob.blocks], [1] * prob.num_vars)
        hp = _highprec.run(
            hp_cones, [-v for v in prob.objective_coeffs], prob.objective_constant,
            settings.gap_tol, settings.feas_tol, settings.max_iter, settings.step_fraction,
            log=log.debug if log.isEnabledFor(logging.DEBUG) else None, refine_gap=refine)
        log.debug("extended precision: %s -> %s", run.status, hp["status"])
        if run.status == OPTIMAL:
            take = hp["status"] == OPTIMAL and hp["gap"] < run.gap
        else:
            take = hp["status"] == OPTIMAL or hp["merit"] < run.merit
        if take:
            run = _Run(np.array(hp["x"]), hp["primal"], hp["dual"], hp["gap"], hp["status"],
                       run.iterations + hp["iterations"], hp["merit"], [])
            zs = _highprec.lift(hp["z"], hp_maps)

    status = MAX_ITER if run.status == NUMERICAL else run.status
    primal, dual = run.primal, run.dual
    if status in (INFEASIBLE, UNBOUNDED):
        primal = dual = math.inf if status == UNBOUNDED else -math.inf
    return SdpSolution(
        x=tuple(float(v) for v in run.x),
        primal_obj=float(primal),
        dual_obj=float(dual),
        gap=float(run.gap),
        status=status,
        iterations=run.iterations,
        z=tuple(zs),
    )


# Iterations without progress, once close to the tolerances, before a run is abandoned.
_PATIENCE = 8


@dataclass
class _Run:
    x: np.ndarray
    primal: float
    dual: float
    gap: float
    status: str
    iterations: int
    merit: float
    z: list


def _run(cones, c, const, settings: SolverSettings) -> _Run:
    m = len(c)
    hs = [k.h() for k in cones]
    deg = sum(k.d for k in cones)

    def G(x):
        return [k.G(x) for k in cones]

    def Gt(zs):
        return sum(k.Gt(z) for k, z in zip(cones, zs))

    def inner(us, vs):
        return sum(k.inner(u, v) for k, u, v in zip(cones, us, vs))

    def norm(us):
        return math.sqrt(inner(us, us))

    hnorm = max(1.0, norm(hs))
    cnorm = max(1.0, float(np.linalg.norm(c)))

    # Gram matrix of the constraint map, used for the starting point.
    gram = np.zeros((m, m))
    for k in cones:
        for i in range(m):
            for j in range(i, m):
                gram[i, j] = gram[j, i] = gram[i, j] + k.inner(k.A[i + 1], k.A[j + 1])
    try:
        gram_inv = np.linalg.inv(gram)
    except np.linalg.LinAlgError:
        gram_inv = np.linalg.pinv(gram)

    # x minimizing ||h - Gx||, z of least norm with G'z = -c, both pushed inside K.
    x = -gram_inv @ np.array([sum(k.inner(k.A[i + 1], k.A[0]) for k in cones) for i in range(m)])
    s_hat = [h - g for h, g in zip(hs, G(x))]
    y = gram_inv @ c
    z_hat = [np.tensordot(y, k.A[1:], axes=1) for k in cones]
    s = [_shift_into_cone(k, v) for k, v in zip(cones, s_hat)]
    z = [_shift_into_cone(k, v) for k, v in zip(cones, z_hat)]
    for k, sv, zv in zip(cones, s, z):
        k.set_scaling(sv, zv)
    tau, kappa = 1.0, 1.0

    # The dual residual stalls near 1e-7 on these problems once Z becomes very
    # ill-conditioned; it only needs to be small enough for dual_obj to mean
    # something, so its tolerance is the square root of feas_tol.
    dual_tol = math.sqrt(settings.feas_tol)
    status = MAX_ITER
    it = 0
    best, best_merit, best_it = None, math.inf, 0
    stalled = 0
    for it in range(settings.max_iter + 1):
        rx = Gt(z) + c * tau
        rz = [sv + gv - hv * tau for sv, gv, hv in zip(s, G(x), hs)]
        cx = float(c @ x)
        hz = inner(hs, z)
        rt = kappa + cx + hz
        sz = inner(s, z)
        mu = (sz + tau * kappa) / (deg + 1)

        pres = norm(rz) / tau / hnorm
        dres = float(np.linalg.norm(rx)) / tau / cnorm
        primal = const - cx / tau
        dual = const + hz / tau
        gap = max(sz / tau**2, abs(dual - primal))
        log.debug("it=%d primal=%.10g dual=%.10g pres=%.2e dres=%.2e gap=%.2e tau=%.2e kappa=%.2e",
                  it, primal, dual, pres, dres, gap, tau, kappa)
        rel_gap = gap / (1.0 + abs(primal))
        dviol = _dual_violation(cones, z)
        merit = max(pres / settings.feas_tol, dres / dual_tol, rel_gap / settings.gap_tol,
                    dviol / dual_tol)
        if merit < best_merit:
            best_merit, best_it = merit, it
            best = (x / tau, primal, dual, gap, [zz / tau for zz in z])

        if merit <= 1.0 and _primal_feasible(cones, x / tau, settings.feas_tol):
            status = OPTIMAL
            break
        # certificates of infeasibility
        if hz < 0 and float(np.linalg.norm(Gt(z))) / -hz <= settings.feas_tol:
            status = INFEASIBLE
            break
        if cx < 0 and norm([sv + gv for sv, gv in zip(s, G(x))]) / -cx <= settings.feas_tol:
            status = UNBOUNDED
            break
        if it == settings.max_iter or stalled >= 3 or (best_merit < 1e4 and it - best_it >= _PATIENCE):
            break

        try:
            lam_sq = [k.lam_sq() for k in cones]
            solve_kkt = _factor_kkt(cones, m)
            x1, z1 = solve_kkt(-c, hs)

            def direction(gamma, ds_rhs, dk_rhs):
                ds_t = [k.lam_solve(d) for k, d in zip(cones, ds_rhs)]
                bx = -(1 - gamma) * rx
                bz = [-(1 - gamma) * r - k.Wt(d) for k, r, d in zip(cones, rz, ds_t)]
                x2, z2 = solve_kkt(bx, bz)
                num = -(1 - gamma) * rt - float(c @ x2) - inner(hs, z2) - dk_rhs / tau
                den = float(c @ x1) + inner(hs, z1) - kappa / tau
                dtau = num / den
                dx = x2 + dtau * x1
                dz = [a + dtau * b for a, b in zip(z2, z1)]
                dkap = (dk_rhs - kappa * dtau) / tau
                # ds from the linear equation itself keeps the residual update exact
                gdx = G(dx)
                ds = [-(1 - gamma) * r - g + h * dtau for r, g, h in zip(rz, gdx, hs)]
                # scaled directions straight from the linearized complementarity
                # condition; these stay accurate when W is badly conditioned
                dz_t = [k.W(v) for k, v in zip(cones, dz)]
                ds_t = [a - b for a, b in zip(ds_t, dz_t)]
                return dx, ds, dz, dtau, dkap, ds_t, dz_t

            def step_to_boundary(ds_t, dz_t, dtau, dkap):
                a = math.inf
                for k, u, v in zip(cones, ds_t, dz_t):
                    a = min(a, k.max_step(u), k.max_step(v))
                if dtau < 0:
                    a = min(a, -tau / dtau)
                if dkap < 0:
                    a = min(a, -kappa / dkap)
                return a

            # predictor
            dx_a, ds_a, dz_a, dtau_a, dkap_a, dst_a, dzt_a = direction(
                0.0, [-v for v in lam_sq], -tau * kappa)
            alpha_a = min(1.0, step_to_boundary(dst_a, dzt_a, dtau_a, dkap_a))
            sigma = (1.0 - alpha_a) ** 3
            # corrector
            ds_rhs = [-l2 + sigma * mu * k.identity() - k.jordan(u, v)
                      for k, l2, u, v in zip(cones, lam_sq, dst_a, dzt_a)]
            dk_rhs = -tau * kappa + sigma * mu - dtau_a * dkap_a
            dx, ds, dz, dtau, dkap, ds_t, dz_t = direction(sigma, ds_rhs, dk_rhs)
            alpha = min(1.0, settings.step_fraction * step_to_boundary(ds_t, dz_t, dtau, dkap))
            log.debug("  alpha_aff=%.3e sigma=%.3e alpha=%.3e", alpha_a, sigma, alpha)
            stalled = stalled + 1 if alpha < 1e-8 else 0

            x = x + alpha * dx
            tau = tau + alpha * dtau
            kappa = kappa + alpha * dkap
            for k, u, v in zip(cones, ds_t, dz_t):
                k.update_scaling(u, v, alpha)
            s = [sv + alpha * u for sv, u in zip(s, ds)]
            z = [zv + alpha * v for zv, v in zip(z, dz)]
        except np.linalg.LinAlgError:
            log.debug("linear algebra failure at iteration %d", it, exc_info=True)
            status = NUMERICAL
            break

    xs, primal, dual, gap, zs = best
    return _Run(xs, primal, dual, gap, status, it, best_merit, zs)


def _primal_feasible(cones, x, tol):
    return all(k.min_eig(k.h() - k.G(x)) >= -tol for k in cones)


def _dual_violation(cones, z):
    """Most negative eigenvalue of z over all blocks, relative to the size of z."""
    scale = max(float(np.max(np.abs(v))) for v in z)
    if scale == 0.0:
        return 0.0
    return max(0.0, -min(k.min_eig(v) for k, v in zip(cones, z)) / scale)


def _factor_kkt(cones, m, refine=3):
    """Return a solver for  G'dz = bx,  G dx - H dz = bz  (H = W'W).

    dz is eliminated, leaving the Schur complement B'B where column j of B
    stacks W^{-T} A_j over all blocks. B is factored by QR rather than forming
    B'B, and each solve is followed by a few rounds of iterative refinement on
    the unreduced system.
    """
    B = np.column_stack([
        np.concatenate([k.Winvt(k.A[j + 1]).ravel() for k in cones]) for j in range(m)])
    Rq = np.linalg.qr(B, mode="r")
    if np.min(np.abs(np.diag(Rq))) <= 1e-300:
        raise np.linalg.LinAlgError("singular Schur complement")

    def schur_solve(r):
        y = _tri_solve(Rq.T, r, lower=True)
        return _tri_solve(Rq, y, lower=False)

    def once(bx, bz):
        hbz = [k.Hinv(b) for k, b in zip(cones, bz)]
        dx = schur_solve(bx + sum(k.Gt(v) for k, v in zip(cones, hbz)))
        dz = [k.Hinv(k.G(dx) - b) for k, b in zip(cones, bz)]
        return dx, dz

    def solve_kkt(bx, bz):
        bx = np.asarray(bx, dtype=float)
        dx, dz = once(bx, bz)
        for _ in range(refine):
            ex = bx - sum(k.Gt(v) for k, v in zip(cones, dz))
            ez = [b - (k.G(dx) - k.Wt(k.W(v))) for k, b, v in zip(cones, bz, dz)]
            cx, cz = once(ex, ez)
            dx = dx + cx
            dz = [a + b for a, b in zip(dz, cz)]
        return dx, dz

    return solve_kkt


def _tri_solve(L, b, lower):
    return scipy.linalg.solve_triangular(L, b, lower=lower)


@dataclass(frozen=True)
class ResidualReport:
    block_min_eig: tuple[tuple[str, float], ...]
    flagged: tuple[str, ...]
    objective: float
    objective_error: float
    complementarity: float
    dual_residual: float

    @property
    def ok(self) -> bool:
        return not self.flagged


def check_solution(prob: LinearMatrixProblem, sol: SdpSolution, tol: float = 1e-8) -> ResidualReport:
    """Recompute residuals of ``sol`` from the exact model.

    Every dense block contributes its smallest eigenvalue; diagonal blocks
    contribute one entry per row. Anything below ``-tol`` is flagged.
    """
    x = np.array(sol.x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("solution vector is not finite")
    rows: list[tuple[str, float]] = []
    slacks = []
    for b in prob.blocks:
        mats = b.float_mats()
        f = mats[0] + np.tensordot(x, mats[1:], axes=1)
        slacks.append(f)
        if b.kind == DENSE:
            rows.append((b.label, float(np.linalg.eigvalsh(f)[0])))
        else:
            rows.extend((b.row_label(i), float(v)) for i, v in enumerate(f))
    flagged = tuple(name for name, v in rows if v < -tol)
    obj = prob.objective(x)
    comp = math.nan
    dres = math.nan
    if len(sol.z) == len(prob.blocks):
        comp = float(sum(np.vdot(f, z) for f, z in zip(slacks, sol.z)))
        g = np.array([sum(float(np.vdot(b.float_mats()[j + 1], z)) for b, z in zip(prob.blocks, sol.z))
                      for j in range(prob.num_vars)])
        target = -np.array([float(v) for v in prob.objective_coeffs])
        dres = float(np.linalg.norm(g - target))
    return ResidualReport(
        block_min_eig=tuple(rows),
        flagged=flagged,
        objective=obj,
        objective_error=abs(obj - sol.primal_obj),
        complementarity=comp,
        dual_residual=dres,
    )
