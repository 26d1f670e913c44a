"""Dense primal-dual interior-point solver for the conic contract.

Solves  min c'x  s.t.  b - Ax in K  through the homogeneous self-dual
embedding with Nesterov-Todd scaling and a Mehrotra predictor-corrector,
the classic recipe for mixed zero/nonnegative/second-order/PSD cones.
Problem data is Ruiz-equilibrated (uniformly per cone block, so membership
is preserved) before iterating; all reported residuals refer to the
original data.

Pure numpy/scipy; intended for the moderate dense problems this package
produces (a few hundred variables).  A compiled engine can replace it at
import time, see `riswipt.conic.solve`.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import lu_factor, lu_solve, solve_triangular

from .program import (INFEASIBLE, NUMERICAL_LIMIT, OPTIMAL, UNBOUNDED,
                      ConicProgram, ConicSolution, smat, svec, svec_dim)

_STEP_FRACTION = 0.99
_RUIZ_PASSES = 10


# --- cone blocks -------------------------------------------------------------

class _NonnegBlock:
    def __init__(self, dim):
        self.dim = dim

    def identity(self):
        return np.ones(self.dim)

    def max_step(self, v, dv):
        neg = dv < 0
        if not np.any(neg):
            return np.inf
        return float(np.min(-v[neg] / dv[neg]))

    def jordan(self, u, v):
        return u * v

    def scaling(self, s, z):
        if np.any(s <= 0) or np.any(z <= 0):
            raise np.linalg.LinAlgError("nonnegative iterate left the cone")
        w = np.sqrt(s / z)

        class Scale:
            lam = np.sqrt(s * z)

            @staticmethod
            def wtw():
                return np.diag(w * w)

            @staticmethod
            def w_apply(v):
                return w * v

            @staticmethod
            def wt_apply(v):
                return w * v

            @staticmethod
            def winv_t_apply(v):
                return v / w

            @staticmethod
            def lam_solve(d):
                return d / Scale.lam

        return Scale


class _SocBlock:
    def __init__(self, dim):
        self.dim = dim
        self._jdiag = np.ones(dim)
        self._jdiag[1:] = -1.0

    @staticmethod
    def _det(v):
        return v[0] ** 2 - v[1:] @ v[1:]

    def identity(self):
        e = np.zeros(self.dim)
        e[0] = 1.0
        return e

    def max_step(self, v, dv):
        a = self._det(dv)
        bq = v[0] * dv[0] - v[1:] @ dv[1:]
        cq = self._det(v)
        candidates = []
        if dv[0] < 0:
            candidates.append(-v[0] / dv[0])
        if abs(a) < 1e-14 * max(1.0, abs(bq)):
            if bq < 0:
                candidates.append(-cq / (2 * bq))
        else:
            disc = bq * bq - a * cq
            if disc >= 0:
                root = np.sqrt(disc)
                for r in ((-bq - root) / a, (-bq + root) / a):
                    if r > 0:
                        candidates.append(r)
        return float(min(candidates)) if candidates else np.inf

    def jordan(self, u, v):
        out = np.empty(self.dim)
        out[0] = u @ v
        out[1:] = u[0] * v[1:] + v[0] * u[1:]
        return out

    def scaling(self, s, z):
        det_s, det_z = self._det(s), self._det(z)
        if det_s <= 0 or det_z <= 0 or s[0] <= 0 or z[0] <= 0:
            raise np.linalg.LinAlgError("second-order iterate left the cone")
        a = np.sqrt(det_s)
        bb = np.sqrt(det_z)
        sb, zb = s / a, z / bb
        gamma = np.sqrt((1.0 + sb @ zb) / 2.0)
        wbar = sb.copy()
        wbar[0] += zb[0]
        wbar[1:] -= zb[1:]
        wbar /= 2.0 * gamma                      # J(wbar) = 1
        q = np.sqrt((wbar[0] + 1.0) / 2.0)
        vhat = np.empty(self.dim)
        vhat[0] = q
        vhat[1:] = wbar[1:] / (2.0 * q)          # Jordan square root direction
        eta = np.sqrt(a / bb)
        jdiag = self._jdiag
        w_mat = eta * (2.0 * np.outer(vhat, vhat) - np.diag(jdiag))
        lam = w_mat @ z
        lam_det = lam[0] ** 2 - lam[1:] @ lam[1:]

        class Scale:
            pass

        Scale.lam = lam
        Scale.wtw = staticmethod(lambda: w_mat @ w_mat)
        Scale.w_apply = staticmethod(lambda v: w_mat @ v)
        Scale.wt_apply = staticmethod(lambda v: w_mat @ v)
        Scale.winv_t_apply = staticmethod(
            lambda v: (jdiag * (w_mat @ (jdiag * v))) / (eta * eta))
        def lam_solve(d):
            x0 = (lam[0] * d[0] - lam[1:] @ d[1:]) / lam_det
            out = np.empty_like(d)
            out[0] = x0
            out[1:] = (d[1:] - x0 * lam[1:]) / lam[0]
            return out
        Scale.lam_solve = staticmethod(lam_solve)
        return Scale


class _PsdBlock:
    def __init__(self, side):
        self.side = side
        self.dim = svec_dim(side)

    def identity(self):
        return svec(np.eye(self.side))

    def max_step(self, v, dv):
        mat = smat(v)
        chol = np.linalg.cholesky(mat)
        d = smat(dv)
        half = solve_triangular(chol, d, lower=True)
        sym = solve_triangular(chol, half.T, lower=True)
        lam_min = float(np.linalg.eigvalsh((sym + sym.T) / 2.0).min())
        return np.inf if lam_min >= 0 else 1.0 / (-lam_min)

    def jordan(self, u, v):
        mu, mv = smat(u), smat(v)
        return svec((mu @ mv + mv @ mu) / 2.0)

    def scaling(self, s, z):
        side, dim = self.side, self.dim
        ls = np.linalg.cholesky(smat(s))
        lz = np.linalg.cholesky(smat(z))
        u_svd, sing, vt_svd = np.linalg.svd(lz.T @ ls)
        sqrt_sing = np.sqrt(sing)
        r = ls @ vt_svd.T / sqrt_sing
        r_inv = (u_svd.T @ lz.T) / sqrt_sing[:, None]
        gram = r @ r.T

        class Scale:
            lam = svec(np.diag(sing))

            @staticmethod
            def wtw():
                out = np.empty((dim, dim))
                basis = np.zeros(dim)
                for k in range(dim):
                    basis[k] = 1.0
                    out[:, k] = svec(gram @ smat(basis) @ gram)
                    basis[k] = 0.0
                return out

            @staticmethod
            def w_apply(v):
                return svec(r.T @ smat(v) @ r)

            @staticmethod
            def wt_apply(v):
                return svec(r @ smat(v) @ r.T)

            @staticmethod
            def winv_t_apply(v):
                return svec(r_inv @ smat(v) @ r_inv.T)

            @staticmethod
            def lam_solve(d):
                denom = (sing[:, None] + sing[None, :]) / 2.0
                return svec(smat(d) / denom)

        return Scale


def _make_blocks(cones):
    blocks = []
    offset = cones.zero
    if cones.nonneg:
        blocks.append((slice(offset, offset + cones.nonneg), _NonnegBlock(cones.nonneg)))
        offset += cones.nonneg
    for q in cones.soc:
        blocks.append((slice(offset, offset + q), _SocBlock(q)))
        offset += q
    for p in cones.psd:
        d = svec_dim(p)
        blocks.append((slice(offset, offset + d), _PsdBlock(p)))
        offset += d
    return blocks


# --- equilibration -----------------------------------------------------------

def _row_groups(cones):
    """Index slices that must share one scaling factor to preserve membership."""
    groups = [slice(i, i + 1) for i in range(cones.zero + cones.nonneg)]
    offset = cones.zero + cones.nonneg
    for q in cones.soc:
        groups.append(slice(offset, offset + q))
        offset += q
    for p in cones.psd:
        d = svec_dim(p)
        groups.append(slice(offset, offset + d))
        offset += d
    return groups


def _equilibrate(a, b, c, cones):
    """Ruiz passes over the augmented data [A b; c' 0], per-block on rows."""
    m, n = a.shape
    d_row = np.ones(m)
    d_col = np.ones(n)
    a_s = a.copy()
    b_s = b.astype(float).copy()
    c_s = c.astype(float).copy()
    groups = _row_groups(cones)
    for _ in range(_RUIZ_PASSES):
        col_norm = np.maximum(np.max(np.abs(a_s), axis=0), np.abs(c_s))
        col_fac = 1.0 / np.sqrt(np.where(col_norm > 0, col_norm, 1.0))
        a_s *= col_fac[None, :]
        c_s *= col_fac
        d_col *= col_fac
        row_fac = np.ones(m)
        for g in groups:
            norm = max(float(np.max(np.abs(a_s[g]), initial=0.0)),
                       float(np.max(np.abs(b_s[g]), initial=0.0)))
            if norm > 0:
                row_fac[g] = 1.0 / np.sqrt(norm)
        a_s *= row_fac[:, None]
        b_s *= row_fac
        d_row *= row_fac
    # scalar normalizations keep tau/kappa balanced on badly sized problems
    sigma_b = max(1.0, float(np.abs(b_s).max(initial=0.0)))
    sigma_c = max(1.0, float(np.abs(c_s).max(initial=0.0)))
    return a_s, b_s / sigma_b, c_s / sigma_c, d_row, d_col, sigma_b, sigma_c


# --- main loop ---------------------------------------------------------------

def solve_native(prog: ConicProgram, tol: float = 1e-7,
                 max_iter: int = 100) -> ConicSolution:
    """Solve the program; never raises on numerical trouble, reports status."""
    a0, b0, c0 = prog.A, prog.b, prog.c
    m, n = a0.shape
    a, b, c, d_row, d_col, sigma_b, sigma_c = _equilibrate(a0, b0, c0, prog.cones)
    cones = prog.cones
    blocks = _make_blocks(cones)
    zero_rows = slice(0, cones.zero)
    degree = cones.degree + 1

    norm_a = max(1.0, float(np.abs(a0).max()))
    # residuals measured against the contract's tol * (1 + ||data||) allowance
    data_scale = 1.0 + max(float(np.abs(a0).max(initial=0.0)),
                           float(np.abs(b0).max(initial=0.0)),
                           float(np.abs(c0).max(initial=0.0)))

    x = np.zeros(n)
    s = np.zeros(m)
    z = np.zeros(m)
    for sl, blk in blocks:
        e = blk.identity()
        s[sl] = e
        z[sl] = e
    tau, kappa = 1.0, 1.0

    best = None
    best_score = np.inf
    last_step = None

    def candidate_metrics():
        xc = sigma_b * d_col * x / tau
        sc = sigma_b * s / d_row / tau
        zc = sigma_c * d_row * z / tau
        pres = float(np.linalg.norm(a0 @ xc + sc - b0)) / data_scale
        dres = float(np.linalg.norm(a0.T @ zc + c0)) / data_scale
        pcost = float(c0 @ xc)
        gap = float(sc @ zc)
        relgap = gap / max(1.0, abs(pcost))
        return xc, sc, zc, pres, dres, pcost, gap, relgap

    status = NUMERICAL_LIMIT
    iters_done = 0

    for iteration in range(max_iter):
        iters_done = iteration
        # residuals of the homogeneous model (scaled data)
        r_d = a.T @ z + c * tau
        r_p = a @ x + s - b * tau
        r_g = float(c @ x + b @ z + kappa)
        mu = (s @ z + tau * kappa) / degree

        xc, sc, zc, pres, dres, pcost, gap, relgap = candidate_metrics()
        score = max(pres, dres, relgap)
        if score < best_score:
            best_score = score
            best = (xc.copy(), pres, dres, gap, pcost)
        if pres <= tol and dres <= tol and relgap <= max(tol, 1e-6):
            status = OPTIMAL
            best = (xc.copy(), pres, dres, gap, pcost)
            break

        # infeasibility / unboundedness certificates (original data)
        z_rec = sigma_c * d_row * z
        x_rec = sigma_b * d_col * x
        s_rec = sigma_b * s / d_row
        bz = float(b0 @ z_rec)
        cx = float(c0 @ x_rec)
        if bz < -1e-12:
            zcert = z_rec / (-bz)
            if np.linalg.norm(a0.T @ zcert) <= tol * norm_a:
                status = INFEASIBLE
                best = (None, np.inf, np.inf, np.inf, np.nan)
                break
        if cx < -1e-12:
            xcert = x_rec / (-cx)
            scert = s_rec / (-cx)
            if np.linalg.norm(a0 @ xcert + scert) <= tol * norm_a:
                status = UNBOUNDED
                best = (None, np.inf, np.inf, np.inf, np.nan)
                break

        # Nesterov-Todd scalings and the quasi-definite KKT matrix; a failure
        # means roundoff pushed the last step outside the cone: back half off
        scales = None
        for _ in range(4):
            try:
                scales = [(sl, blk, blk.scaling(s[sl], z[sl])) for sl, blk in blocks]
                break
            except np.linalg.LinAlgError:
                if last_step is None:
                    break
                dx_l, dz_l, ds_l, dtau_l, dkappa_l, alpha_l = last_step
                alpha_l *= 0.5
                x -= alpha_l * dx_l
                z -= alpha_l * dz_l
                s -= alpha_l * ds_l
                tau -= alpha_l * dtau_l
                kappa -= alpha_l * dkappa_l
                last_step = (dx_l, dz_l, ds_l, dtau_l, dkappa_l, alpha_l)
        if scales is None:
            break
        kkt = np.zeros((n + m, n + m))
        kkt[:n, n:] = a.T
        kkt[n:, :n] = a
        for sl, _, sc_blk in scales:
            rows = slice(n + sl.start, n + sl.stop)
            kkt[rows, rows.start:rows.stop] -= sc_blk.wtw()
        try:
            lu = lu_factor(kkt)
        except Exception:
            break

        def kkt_solve(rx, rz):
            rhs = np.concatenate([rx, rz])
            sol = lu_solve(lu, rhs)
            for _ in range(2):  # refinement recovers accuracy on spread data
                resid = rhs - kkt @ sol
                if np.linalg.norm(resid) <= 1e-14 * max(1.0, np.linalg.norm(rhs)):
                    break
                sol = sol + lu_solve(lu, resid)
            return sol[:n], sol[n:]

        x1, z1 = kkt_solve(-c, b)
        denom_tau_base = float(c @ x1 + b @ z1) - kappa / tau

        def direction(eta_d, eta_p, eta_g, d_s, d_kappa):
            rhs_z = eta_p.copy()
            for sl, _, sc_blk in scales:
                rhs_z[sl] -= sc_blk.wt_apply(sc_blk.lam_solve(d_s[sl]))
            x2, z2 = kkt_solve(eta_d, rhs_z)
            denom = denom_tau_base
            if abs(denom) < 1e-14:
                denom = -1e-14
            dtau = (eta_g - d_kappa / tau - float(c @ x2 + b @ z2)) / denom
            dx = x2 + dtau * x1
            dz = z2 + dtau * z1
            ds = np.zeros(m)
            ds[zero_rows] = eta_p[zero_rows] - (a @ dx - b * dtau)[zero_rows]
            for sl, _, sc_blk in scales:
                ds[sl] = sc_blk.wt_apply(
                    sc_blk.lam_solve(d_s[sl]) - sc_blk.w_apply(dz[sl]))
            dkappa = (d_kappa - kappa * dtau) / tau
            return dx, dz, ds, dtau, dkappa

        def max_feasible_step(dz, ds, dtau, dkappa):
            alpha = np.inf
            if dtau < 0:
                alpha = min(alpha, -tau / dtau)
            if dkappa < 0:
                alpha = min(alpha, -kappa / dkappa)
            for sl, blk, _ in scales:
                alpha = min(alpha, blk.max_step(s[sl], ds[sl]))
                alpha = min(alpha, blk.max_step(z[sl], dz[sl]))
            return alpha

        # predictor
        d_s_aff = np.zeros(m)
        for sl, blk, sc_blk in scales:
            d_s_aff[sl] = -blk.jordan(sc_blk.lam, sc_blk.lam)
        aff = direction(-r_d, -r_p, -r_g, d_s_aff, -tau * kappa)
        dx_a, dz_a, ds_a, dtau_a, dkappa_a = aff
        alpha_aff = min(1.0, max_feasible_step(dz_a, ds_a, dtau_a, dkappa_a))
        mu_aff = ((s + alpha_aff * ds_a) @ (z + alpha_aff * dz_a)
                  + (tau + alpha_aff * dtau_a) * (kappa + alpha_aff * dkappa_a)) / degree
        sigma = float(np.clip((max(mu_aff, 0.0) / mu) ** 3, 1e-8, 0.999))

        # corrector + centering
        d_s = np.zeros(m)
        for sl, blk, sc_blk in scales:
            corr = blk.jordan(sc_blk.winv_t_apply(ds_a[sl]), sc_blk.w_apply(dz_a[sl]))
            d_s[sl] = sigma * mu * blk.identity() - blk.jordan(sc_blk.lam, sc_blk.lam) - corr
        d_kappa = sigma * mu - tau * kappa - dtau_a * dkappa_a
        comb = direction(-(1 - sigma) * r_d, -(1 - sigma) * r_p,
                         -(1 - sigma) * r_g, d_s, d_kappa)
        dx, dz, ds, dtau, dkappa = comb
        alpha = min(1.0, _STEP_FRACTION * max_feasible_step(dz, ds, dtau, dkappa))
        if not np.isfinite(alpha) or alpha <= 1e-10:
            break

        x += alpha * dx
        z += alpha * dz
        s += alpha * ds
        tau += alpha * dtau
        kappa += alpha * dkappa
        last_step = (dx, dz, ds, dtau, dkappa, alpha)
        iters_done = iteration + 1

    if status == OPTIMAL:
        xc, pres, dres, gap, pcost = best
        return ConicSolution(status=OPTIMAL, x=xc, objective=pcost, pres=pres,
                             dres=dres, gap=gap, iterations=iters_done)
    if status in (INFEASIBLE, UNBOUNDED):
        return ConicSolution(status=status, x=None, objective=np.nan,
                             pres=np.inf, dres=np.inf, gap=np.inf,
                             iterations=iters_done)
    if best is not None and best[0] is not None:
        xc, pres, dres, gap, pcost = best
        return ConicSolution(status=NUMERICAL_LIMIT, x=xc, objective=pcost,
                             pres=pres, dres=dres, gap=gap, iterations=iters_done)
    return ConicSolution(status=NUMERICAL_LIMIT, x=None, objective=np.nan,
                         pres=np.inf, dres=np.inf, gap=np.inf, iterations=iters_done)
