"""Numba kernel backend: @njit loop versions of the hot paths.

Mirrors :mod:`subflux.kernels.knumpy` function for function; the test suite
asserts both backends agree.  Kernels are compiled once per process with
on-disk caching, so the first call in a fresh environment pays the JIT cost.
"""

import math

import numpy as np
from numba import njit

from .common import (BC_DIRICHLET, BC_DMR_TOP, BC_OUTFLOW, BC_SLIPWALL,
                     DMR_SQRT3, DMR_X0, GAMMA)

NAME = "numba"


@njit(cache=True)
def _primitives_impl(U, W):
    ne, n, _, _ = U.shape
    for e in range(ne):
        for l in range(n):
            for k in range(n):
                rho = U[e, l, k, 0]
                u = U[e, l, k, 1] / rho
                v = U[e, l, k, 2] / rho
                W[e, l, k, 0] = rho
                W[e, l, k, 1] = u
                W[e, l, k, 2] = v
                W[e, l, k, 3] = (GAMMA - 1.0) * (U[e, l, k, 3] - 0.5 * rho * (u * u + v * v))
    return W


def primitives(U):
    W = np.empty_like(U)
    return _primitives_impl(U, W)


@njit(cache=True, inline="always")
def _ghost_state(kind, w, nx, ny, pos_x, t, bc, dmr_post, dmr_pre, out):
    if kind == BC_DIRICHLET:
        for c in range(4):
            out[c] = bc[c]
    elif kind == BC_SLIPWALL:
        vn = w[1] * nx + w[2] * ny
        out[0] = w[0]
        out[1] = w[1] - 2.0 * vn * nx
        out[2] = w[2] - 2.0 * vn * ny
        out[3] = w[3]
    elif kind == BC_DMR_TOP:
        xs = DMR_X0 + (1.0 + 20.0 * t) / DMR_SQRT3
        if pos_x < xs:
            for c in range(4):
                out[c] = dmr_post[c]
        else:
            for c in range(4):
                out[c] = dmr_pre[c]
    else:   # BC_OUTFLOW
        for c in range(4):
            out[c] = w[c]


@njit(cache=True)
def _gather_neighbor_impl(W, nbr_e, nbr_l, nbr_k, own_l, own_k, bkind,
                          bc_point_state, face_normal, ghost_x, t,
                          dmr_post, dmr_pre, out):
    ne, _, n = nbr_e.shape
    for e in range(ne):
        for f in range(4):
            if bkind[e, f] < 0:
                for j in range(n):
                    e2 = nbr_e[e, f, j]
                    l2 = nbr_l[e, f, j]
                    k2 = nbr_k[e, f, j]
                    for c in range(4):
                        out[e, f, j, c] = W[e2, l2, k2, c]
            else:
                kind = bkind[e, f]
                nx = face_normal[e, f, 0]
                ny = face_normal[e, f, 1]
                for j in range(n):
                    w = W[e, own_l[e, f, j], own_k[e, f, j]]
                    _ghost_state(kind, w, nx, ny, ghost_x[e, f, j], t,
                                 bc_point_state[e, f, j], dmr_post, dmr_pre,
                                 out[e, f, j])
    return out


def gather_neighbor_prims(W, nbr_e, nbr_l, nbr_k, own_l, own_k, bkind,
                          bc_point_state, face_normal, ghost_x, t,
                          dmr_post, dmr_pre):
    out = np.empty((W.shape[0], 4, W.shape[1], 4))
    return _gather_neighbor_impl(W, nbr_e, nbr_l, nbr_k, own_l, own_k,
                                 np.asarray(bkind), bc_point_state, face_normal,
                                 ghost_x, t, dmr_post, dmr_pre, out)


@njit(cache=True, inline="always")
def _lim_scalar(u2, lo, hi, val):
    d = val - u2
    if d > 0.0:
        return min(1.0, (hi - u2) / d)
    if d < 0.0:
        return min(1.0, (lo - u2) / d)
    return 1.0


@njit(cache=True)
def _nnw_line(ue, pa0, pa1, pb0, pb1, nodes, fp, limit, right, left):
    """ue: (n+2, 4) extended line; right/left: (n, 4) outputs."""
    n = nodes.shape[0]
    for k in range(n):
        d2 = nodes[k] - fp[k]
        d3 = fp[k + 1] - nodes[k]
        w5 = d3 / (d2 + d3)
        for c in range(4):
            u1 = ue[k, c]
            u2 = ue[k + 1, c]
            u3 = ue[k + 2, c]
            if k > 0:
                da1 = fp[k] - nodes[k - 1]
                da2 = d2
            else:
                da1 = pa0
                da2 = pa1
            wa = da2 / (da1 + da2)
            ua1 = wa * u1 + (1.0 - wa) * u2
            if k < n - 1:
                db1 = d3
                db2 = nodes[k + 1] - fp[k + 1]
            else:
                db1 = pb1
                db2 = pb0
            wb = db2 / (db1 + db2)
            ub1 = wb * u2 + (1.0 - wb) * u3
            grad = w5 * (u2 - ua1) / d2 + (1.0 - w5) * (ub1 - u2) / d3
            if limit:
                lo = min(u1, min(u2, u3))
                hi = max(u1, max(u2, u3))
                phi = min(_lim_scalar(u2, lo, hi, u2 - grad * d2),
                          _lim_scalar(u2, lo, hi, u2 + grad * d3))
                grad = phi * grad
            right[k, c] = u2 - grad * d2
            left[k, c] = u2 + grad * d3


@njit(cache=True)
def _face_values_impl(W, mask, nbr, ell_l, ell_r, nodes, fp, bdist, limit, fvals):
    ne, n, _, _ = W.shape
    ue = np.empty((n + 2, 4))
    right = np.empty((n, 4))
    left = np.empty((n, 4))
    for e in range(ne):
        if mask[e] == 0:
            for j in range(n):
                for c in range(4):
                    acc_s = 0.0
                    acc_n = 0.0
                    acc_w = 0.0
                    acc_e = 0.0
                    for m in range(n):
                        acc_s += ell_l[m] * W[e, m, j, c]
                        acc_n += ell_r[m] * W[e, m, j, c]
                        acc_w += ell_l[m] * W[e, j, m, c]
                        acc_e += ell_r[m] * W[e, j, m, c]
                    fvals[e, 0, j, c] = acc_s
                    fvals[e, 2, j, c] = acc_n
                    fvals[e, 3, j, c] = acc_w
                    fvals[e, 1, j, c] = acc_e
        else:
            for l in range(n):  # xi sweeps
                for m in range(n):
                    for c in range(4):
                        ue[m + 1, c] = W[e, l, m, c]
                for c in range(4):
                    ue[0, c] = nbr[e, 3, l, c]
                    ue[n + 1, c] = nbr[e, 1, l, c]
                _nnw_line(ue, bdist[e, 3, l, 0], bdist[e, 3, l, 1],
                          bdist[e, 1, l, 0], bdist[e, 1, l, 1],
                          nodes, fp, limit, right, left)
                for c in range(4):
                    fvals[e, 3, l, c] = right[0, c]
                    fvals[e, 1, l, c] = left[n - 1, c]
            for k in range(n):  # eta sweeps
                for m in range(n):
                    for c in range(4):
                        ue[m + 1, c] = W[e, m, k, c]
                for c in range(4):
                    ue[0, c] = nbr[e, 0, k, c]
                    ue[n + 1, c] = nbr[e, 2, k, c]
                _nnw_line(ue, bdist[e, 0, k, 0], bdist[e, 0, k, 1],
                          bdist[e, 2, k, 0], bdist[e, 2, k, 1],
                          nodes, fp, limit, right, left)
                for c in range(4):
                    fvals[e, 0, k, c] = right[0, c]
                    fvals[e, 2, k, c] = left[n - 1, c]
    return fvals


def face_values(W, mask, nbr, ell_l, ell_r, nodes, fp, bdist, limit=True):
    fvals = np.empty((W.shape[0], 4, W.shape[1], 4))
    return _face_values_impl(W, mask, nbr, ell_l, ell_r, nodes, fp, bdist,
                             limit, fvals)


@njit(cache=True, inline="always")
def _llf_scalar(wl, wr, nx, ny, out):
    rl, ul, vl, pl = wl[0], wl[1], wl[2], wl[3]
    rr, ur, vr, pr = wr[0], wr[1], wr[2], wr[3]
    el = pl / (GAMMA - 1.0) + 0.5 * rl * (ul * ul + vl * vl)
    er = pr / (GAMMA - 1.0) + 0.5 * rr * (ur * ur + vr * vr)
    vnl = ul * nx + vl * ny
    vnr = ur * nx + vr * ny
    lam = max(abs(vnl) + math.sqrt(GAMMA * pl / rl),
              abs(vnr) + math.sqrt(GAMMA * pr / rr))
    out[0] = 0.5 * (rl * vnl + rr * vnr) - 0.5 * lam * (rr - rl)
    out[1] = 0.5 * (rl * ul * vnl + pl * nx + rr * ur * vnr + pr * nx) \
        - 0.5 * lam * (rr * ur - rl * ul)
    out[2] = 0.5 * (rl * vl * vnl + pl * ny + rr * vr * vnr + pr * ny) \
        - 0.5 * lam * (rr * vr - rl * vl)
    out[3] = 0.5 * ((el + pl) * vnl + (er + pr) * vnr) - 0.5 * lam * (er - el)


@njit(cache=True)
def _face_riemann_impl(fvals, fA_e, fA_f, fB_e, fB_f, fB_axis, fnorm, btag,
                       bc_face_state, fpos_x, t, dmr_post, dmr_pre, fhat):
    nf = fA_e.shape[0]
    n = fvals.shape[2]
    ghost = np.empty(4)
    for fid in range(nf):
        ea, fa = fA_e[fid], fA_f[fid]
        nx = fnorm[fid, 0]
        ny = fnorm[fid, 1]
        if fB_e[fid] >= 0:
            eb, fb = fB_e[fid], fB_f[fid]
            for p in range(n):
                _llf_scalar(fvals[ea, fa, p], fvals[eb, fb, fB_axis[fid, p]],
                            nx, ny, fhat[fid, p])
        else:
            kind = btag[fid]
            for p in range(n):
                wa = fvals[ea, fa, p]
                _ghost_state(kind, wa, nx, ny, fpos_x[fid, p], t,
                             bc_face_state[fid, p], dmr_post, dmr_pre, ghost)
                _llf_scalar(wa, ghost, nx, ny, fhat[fid, p])
    return fhat


def face_riemann(fvals, fA_e, fA_f, fB_e, fB_f, fB_axis, fnorm, btag,
                 bc_face_state, fpos_x, t, dmr_post, dmr_pre):
    fhat = np.empty((fA_e.shape[0], fvals.shape[2], 4))
    return _face_riemann_impl(fvals, fA_e, fA_f, fB_e, fB_f, fB_axis, fnorm,
                              btag, bc_face_state, fpos_x, t, dmr_post,
                              dmr_pre, fhat)


@njit(cache=True)
def _gather_face_flux_impl(fhat, ef_id, ef_sign, ef_scale, ef_param, out):
    ne = ef_id.shape[0]
    n = fhat.shape[1]
    for e in range(ne):
        for f in range(4):
            fid = ef_id[e, f]
            fac = ef_sign[e, f] * ef_scale[e, f]
            for j in range(n):
                p = ef_param[e, f, j]
                for c in range(4):
                    out[e, f, j, c] = fac * fhat[fid, p, c]
    return out


def gather_face_flux(fhat, ef_id, ef_sign, ef_scale, ef_param):
    out = np.empty((ef_id.shape[0], 4, fhat.shape[1], 4))
    return _gather_face_flux_impl(fhat, ef_id, ef_sign, ef_scale, ef_param, out)


@njit(cache=True)
def _cpr_residual_impl(U, W, mask, ax, ay, bx, by, D, ell_l, ell_r, gl, gr,
                       fh_elem, out):
    ne, n, _, _ = U.shape
    Ft = np.empty((n, n, 4))
    Gt = np.empty((n, n, 4))
    fw = np.empty((n, 4))
    fe = np.empty((n, 4))
    gs = np.empty((n, 4))
    gn = np.empty((n, 4))
    for e in range(ne):
        if mask[e] != 0:
            continue
        for l in range(n):
            for k in range(n):
                rho = W[e, l, k, 0]
                u = W[e, l, k, 1]
                v = W[e, l, k, 2]
                p = W[e, l, k, 3]
                ru = U[e, l, k, 1]
                rv = U[e, l, k, 2]
                ep = U[e, l, k, 3] + p
                f0, f1, f2, f3 = rho * u, ru * u + p, rv * u, ep * u
                g0, g1, g2, g3 = rho * v, ru * v, rv * v + p, ep * v
                a1 = ax[e, l, k]
                a2 = ay[e, l, k]
                b1 = bx[e, l, k]
                b2 = by[e, l, k]
                Ft[l, k, 0] = a1 * f0 + a2 * g0
                Ft[l, k, 1] = a1 * f1 + a2 * g1
                Ft[l, k, 2] = a1 * f2 + a2 * g2
                Ft[l, k, 3] = a1 * f3 + a2 * g3
                Gt[l, k, 0] = b1 * f0 + b2 * g0
                Gt[l, k, 1] = b1 * f1 + b2 * g1
                Gt[l, k, 2] = b1 * f2 + b2 * g2
                Gt[l, k, 3] = b1 * f3 + b2 * g3
        for l in range(n):
            for c in range(4):
                aw = 0.0
                ae = 0.0
                as_ = 0.0
                an = 0.0
                for m in range(n):
                    aw += ell_l[m] * Ft[l, m, c]
                    ae += ell_r[m] * Ft[l, m, c]
                    as_ += ell_l[m] * Gt[m, l, c]
                    an += ell_r[m] * Gt[m, l, c]
                fw[l, c] = aw
                fe[l, c] = ae
                gs[l, c] = as_
                gn[l, c] = an
        for l in range(n):
            for k in range(n):
                for c in range(4):
                    dF = 0.0
                    dG = 0.0
                    for m in range(n):
                        dF += D[k, m] * Ft[l, m, c]
                        dG += D[l, m] * Gt[m, k, c]
                    corr = ((fh_elem[e, 3, l, c] - fw[l, c]) * gl[k]
                            + (fh_elem[e, 1, l, c] - fe[l, c]) * gr[k]
                            + (fh_elem[e, 0, k, c] - gs[k, c]) * gl[l]
                            + (fh_elem[e, 2, k, c] - gn[k, c]) * gr[l])
                    out[e, l, k, c] = -dF - dG - corr
    return out


def cpr_residual(U, W, mask, ax, ay, bx, by, D, ell_l, ell_r, gl, gr,
                 fh_elem, out):
    return _cpr_residual_impl(U, W, mask, ax, ay, bx, by, D, ell_l, ell_r,
                              gl, gr, fh_elem, out)


@njit(cache=True)
def _cnnw2_residual_impl(W, mask, nbr, fh_elem, sx_ax, sx_ay, sy_bx, sy_by,
                         nodes, wts, fp, bdist, limit, out):
    ne, n, _, _ = W.shape
    ue = np.empty((n + 2, 4))
    rightv = np.empty((n, n, 4))
    leftv = np.empty((n, n, 4))
    fh = np.empty((n + 1, 4))
    for e in range(ne):
        if mask[e] == 0:
            continue
        # xi sweeps
        for l in range(n):
            for m in range(n):
                for c in range(4):
                    ue[m + 1, c] = W[e, l, m, c]
            for c in range(4):
                ue[0, c] = nbr[e, 3, l, c]
                ue[n + 1, c] = nbr[e, 1, l, c]
            _nnw_line(ue, bdist[e, 3, l, 0], bdist[e, 3, l, 1],
                      bdist[e, 1, l, 0], bdist[e, 1, l, 1],
                      nodes, fp, limit, rightv[l], leftv[l])
        for l in range(n):
            for c in range(4):
                fh[0, c] = fh_elem[e, 3, l, c]
                fh[n, c] = fh_elem[e, 1, l, c]
            for i in range(1, n):
                a1 = sx_ax[e, l, i]
                a2 = sx_ay[e, l, i]
                s = math.hypot(a1, a2)
                _llf_scalar(leftv[l, i - 1], rightv[l, i], a1 / s, a2 / s, fh[i])
                for c in range(4):
                    fh[i, c] *= s
            for k in range(n):
                for c in range(4):
                    out[e, l, k, c] = -(fh[k + 1, c] - fh[k, c]) / wts[k]
        # eta sweeps
        for k in range(n):
            for m in range(n):
                for c in range(4):
                    ue[m + 1, c] = W[e, m, k, c]
            for c in range(4):
                ue[0, c] = nbr[e, 0, k, c]
                ue[n + 1, c] = nbr[e, 2, k, c]
            _nnw_line(ue, bdist[e, 0, k, 0], bdist[e, 0, k, 1],
                      bdist[e, 2, k, 0], bdist[e, 2, k, 1],
                      nodes, fp, limit, rightv[k], leftv[k])
        for k in range(n):
            for c in range(4):
                fh[0, c] = fh_elem[e, 0, k, c]
                fh[n, c] = fh_elem[e, 2, k, c]
            for j in range(1, n):
                b1 = sy_bx[e, k, j]
                b2 = sy_by[e, k, j]
                s = math.hypot(b1, b2)
                _llf_scalar(leftv[k, j - 1], rightv[k, j], b1 / s, b2 / s, fh[j])
                for c in range(4):
                    fh[j, c] *= s
            for l in range(n):
                for c in range(4):
                    out[e, l, k, c] += -(fh[l + 1, c] - fh[l, c]) / wts[l]
    return out


def cnnw2_residual(W, mask, nbr, fh_elem, sx_ax, sx_ay, sy_bx, sy_by,
                   nodes, wts, fp, bdist, limit, out):
    return _cnnw2_residual_impl(W, mask, nbr, fh_elem, sx_ax, sx_ay, sy_bx,
                                sy_by, nodes, wts, fp, bdist, limit, out)


@njit(cache=True, inline="always")
def _roe_scalar(wl, wr, printed, out):
    sl = math.sqrt(wl[0])
    sr = math.sqrt(wr[0])
    wsum = sl + sr
    rho = sl * sr
    u = (sl * wl[1] + sr * wr[1]) / wsum
    v = (sl * wl[2] + sr * wr[2]) / wsum
    gg = GAMMA / (GAMMA - 1.0)
    hl = gg * wl[3] / wl[0] + 0.5 * (wl[1] * wl[1] + wl[2] * wl[2])
    hr = gg * wr[3] / wr[0] + 0.5 * (wr[1] * wr[1] + wr[2] * wr[2])
    h = (sl * hl + sr * hr) / wsum
    hterm = h * h if printed else rho * h
    out[0] = rho
    out[1] = u
    out[2] = v
    out[3] = (hterm - 0.5 * rho * (u * u + v * v)) / gg


@njit(cache=True, inline="always")
def _energy_ratio(modal, nm):
    total = 0.0
    for i in range(nm):
        total += modal[i] * modal[i]
    if total == 0.0:
        return 0.0
    top = modal[nm - 1] * modal[nm - 1]
    rest = total - top
    e1 = top / total
    e2 = modal[nm - 2] * modal[nm - 2] / rest if rest > 0.0 else 0.0
    return max(e1, e2)


@njit(cache=True)
def _detect_impl(W, nbr, Kin, Kaug, thr_orig, thr_aug, improved, var_rhop,
                 roe_printed, mask, emax):
    ne, n, _, _ = W.shape
    nm = n + 2 if improved else n
    buf = np.empty(n + 2)
    modal = np.empty(n + 2)
    roe = np.empty(4)
    thr = thr_aug if improved else thr_orig
    K = Kaug if improved else Kin
    for e in range(ne):
        best = 0.0
        for direction in range(2):
            for line in range(n):
                if improved:
                    if direction == 0:
                        _roe_scalar(W[e, line, 0], nbr[e, 3, line], roe_printed, roe)
                    else:
                        _roe_scalar(W[e, 0, line], nbr[e, 0, line], roe_printed, roe)
                    buf[0] = roe[0] * roe[3] if var_rhop else roe[0]
                    for m in range(n):
                        w = W[e, line, m] if direction == 0 else W[e, m, line]
                        buf[m + 1] = w[0] * w[3] if var_rhop else w[0]
                    if direction == 0:
                        _roe_scalar(W[e, line, n - 1], nbr[e, 1, line], roe_printed, roe)
                    else:
                        _roe_scalar(W[e, n - 1, line], nbr[e, 2, line], roe_printed, roe)
                    buf[n + 1] = roe[0] * roe[3] if var_rhop else roe[0]
                else:
                    for m in range(n):
                        w = W[e, line, m] if direction == 0 else W[e, m, line]
                        buf[m] = w[0] * w[3] if var_rhop else w[0]
                for i in range(nm):
                    acc = 0.0
                    for j in range(nm):
                        acc += K[i, j] * buf[j]
                    modal[i] = acc
                er = _energy_ratio(modal, nm)
                if er > best:
                    best = er
        emax[e] = best
        mask[e] = 1 if best > thr else 0
    return mask, emax


def detect(W, nbr, Kin, Kaug, thr_orig, thr_aug, improved, var_rhop, roe_printed):
    ne = W.shape[0]
    mask = np.empty(ne, dtype=np.int8)
    emax = np.empty(ne)
    return _detect_impl(W, nbr, Kin, Kaug, thr_orig, thr_aug, improved,
                        var_rhop, roe_printed, mask, emax)


@njit(cache=True)
def _local_dt_impl(W, jac, wmin2d, out):
    ne, n, _, _ = W.shape
    for e in range(ne):
        best = 1e300
        for l in range(n):
            for k in range(n):
                lam = math.hypot(W[e, l, k, 1], W[e, l, k, 2]) \
                    + math.sqrt(GAMMA * W[e, l, k, 3] / W[e, l, k, 0])
                hsub = wmin2d[l, k] * math.sqrt(jac[e, l, k])
                v = hsub / lam
                if v < best:
                    best = v
        out[e] = best
    return out


def local_dt(W, jac, wmin2d):
    out = np.empty(W.shape[0])
    return _local_dt_impl(W, jac, wmin2d, out)
