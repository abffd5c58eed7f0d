"""Pure-numpy kernel backend (vectorized over elements/faces).

This is the fallback path selected by ``SUBFLUX_BACKEND=numpy`` and the
reference the numba backend is tested against.  All functions are free of
Python-level exceptions on hot paths; state validity is checked by the
driver.  Primitive component order is (rho, u, v, p), conservative
(rho, rho*u, rho*v, E), component axis last.
"""

import numpy as np

from .common import (BC_DIRICHLET, BC_DMR_TOP, BC_OUTFLOW, BC_SLIPWALL,
                     DMR_SQRT3, DMR_X0, GAMMA)

NAME = "numpy"


def primitives(U):
    rho = U[..., 0]
    u = U[..., 1] / rho
    v = U[..., 2] / rho
    p = (GAMMA - 1.0) * (U[..., 3] - 0.5 * rho * (u * u + v * v))
    return np.stack((rho, u, v, p), axis=-1)


def _cons(W):
    rho, u, v, p = W[..., 0], W[..., 1], W[..., 2], W[..., 3]
    E = p / (GAMMA - 1.0) + 0.5 * rho * (u * u + v * v)
    return np.stack((rho, rho * u, rho * v, E), axis=-1)


def _llf_prim(WL, WR, nx, ny):
    """LLF flux from primitive side states; nx, ny broadcast over leading dims."""
    UL, UR = _cons(WL), _cons(WR)
    vnL = WL[..., 1] * nx + WL[..., 2] * ny
    vnR = WR[..., 1] * nx + WR[..., 2] * ny
    cL = np.sqrt(GAMMA * WL[..., 3] / WL[..., 0])
    cR = np.sqrt(GAMMA * WR[..., 3] / WR[..., 0])
    lam = np.maximum(np.abs(vnL) + cL, np.abs(vnR) + cR)
    FL = np.stack((WL[..., 0] * vnL,
                   UL[..., 1] * vnL + WL[..., 3] * nx,
                   UL[..., 2] * vnL + WL[..., 3] * ny,
                   (UL[..., 3] + WL[..., 3]) * vnL), axis=-1)
    FR = np.stack((WR[..., 0] * vnR,
                   UR[..., 1] * vnR + WR[..., 3] * nx,
                   UR[..., 2] * vnR + WR[..., 3] * ny,
                   (UR[..., 3] + WR[..., 3]) * vnR), axis=-1)
    return 0.5 * (FL + FR) - 0.5 * lam[..., None] * (UR - UL)


def _ghost(kind_rows, inner, normal, pos_x, t, bc_state, dmr_post, dmr_pre):
    """Exterior primitive states for boundary rows (vectorized)."""
    out = inner.copy()
    dir_rows = kind_rows == BC_DIRICHLET
    out[dir_rows] = bc_state[dir_rows]
    slip = kind_rows == BC_SLIPWALL
    if np.any(slip):
        w = inner[slip]
        nx, ny = normal[slip][..., 0], normal[slip][..., 1]
        vn = w[..., 1] * nx + w[..., 2] * ny
        out[slip, 1] = w[..., 1] - 2.0 * vn * nx
        out[slip, 2] = w[..., 2] - 2.0 * vn * ny
    dmr = kind_rows == BC_DMR_TOP
    if np.any(dmr):
        xs = DMR_X0 + (1.0 + 20.0 * t) / DMR_SQRT3
        post = pos_x[dmr] < xs
        out[dmr] = np.where(post[..., None], dmr_post, dmr_pre)
    # BC_OUTFLOW rows keep the copied interior value
    return out


def gather_neighbor_prims(W, nbr_e, nbr_l, nbr_k, own_l, own_k, bkind,
                          bc_point_state, face_normal, ghost_x, t,
                          dmr_post, dmr_pre):
    """Nearest line-aligned neighbor primitive state per (element, face, line).

    Boundary faces get ghost values built from the element's own nearest
    solution point per the face's boundary kind.
    """
    ne, _, n = nbr_e.shape
    safe_e = np.where(nbr_e >= 0, nbr_e, 0)
    out = W[safe_e, nbr_l, nbr_k]              # (ne, 4, n, 4)
    bdry = bkind >= 0                          # (ne, 4)
    if np.any(bdry):
        e_i, f_i = np.nonzero(bdry)
        inner = W[e_i[:, None], own_l[e_i, f_i], own_k[e_i, f_i]]   # (nb, n, 4)
        kind_rows = np.repeat(bkind[e_i, f_i], n)
        normal = np.repeat(face_normal[e_i, f_i], n, axis=0)
        ghost = _ghost(kind_rows, inner.reshape(-1, 4), normal,
                       ghost_x[e_i, f_i].reshape(-1), t,
                       bc_point_state[e_i, f_i].reshape(-1, 4), dmr_post, dmr_pre)
        out[e_i, f_i] = ghost.reshape(-1, n, 4)
    return out


def _lim(u2, lo, hi, val):
    d = val - u2
    pos = d > 0
    neg = d < 0
    safe = np.where(d == 0, 1.0, d)
    r = np.where(pos, (hi - u2) / safe, np.where(neg, (lo - u2) / safe, 1.0))
    return np.minimum(1.0, r)


def _idw(ua, ub, da, db):
    w = db / (da + db)
    return w * ua + (1.0 - w) * ub


def nnw_line_states(ue, physA, physB, nodes, fp, limit=True):
    """Limited subcell-face states for a batch of lines.

    ue: (..., n+2, m) line values extended with the neighbor value on each
    end.  physA/physB: (..., 2) physical (neighbor, own) distances for the
    interface-adjacent first layer.  Returns (right, left), each (..., n, m):
    right[..., k, :] is the reconstruction at flux point k from subcell k,
    left[..., k, :] the one at flux point k+1 from the same subcell.
    """
    n = ue.shape[-2] - 2
    right = np.empty(ue.shape[:-2] + (n, ue.shape[-1]))
    left = np.empty_like(right)
    for k in range(n):
        u1, u2, u3 = ue[..., k, :], ue[..., k + 1, :], ue[..., k + 2, :]
        d2 = nodes[k] - fp[k]
        d3 = fp[k + 1] - nodes[k]
        if k > 0:
            ua1 = _idw(u1, u2, fp[k] - nodes[k - 1], d2)
        else:
            ua1 = _idw(u1, u2, physA[..., 0:1], physA[..., 1:2])
        if k < n - 1:
            ub1 = _idw(u2, u3, d3, nodes[k + 1] - fp[k + 1])
        else:
            ub1 = _idw(u2, u3, physB[..., 1:2], physB[..., 0:1])
        w5 = d3 / (d2 + d3)
        grad = w5 * (u2 - ua1) / d2 + (1.0 - w5) * (ub1 - u2) / d3
        if limit:
            lo = np.minimum(np.minimum(u1, u2), u3)
            hi = np.maximum(np.maximum(u1, u2), u3)
            phi = np.minimum(_lim(u2, lo, hi, u2 - grad * d2),
                             _lim(u2, lo, hi, u2 + grad * d3))
            grad = phi * grad
        right[..., k, :] = u2 - grad * d2
        left[..., k, :] = u2 + grad * d3
    return right, left


def _extend_lines(lines, lo_vals, hi_vals):
    ext = np.concatenate([lo_vals[..., None, :], lines, hi_vals[..., None, :]], axis=-2)
    return ext


def face_values(W, mask, nbr, ell_l, ell_r, nodes, fp, bdist, limit=True):
    """Per-element face states: Lagrange trace if smooth, NNW value if troubled."""
    fvals = np.empty((W.shape[0], 4, W.shape[1], 4))
    fvals[:, 0] = np.einsum("emkc,m->ekc", W, ell_l)
    fvals[:, 1] = np.einsum("elmc,m->elc", W, ell_r)
    fvals[:, 2] = np.einsum("emkc,m->ekc", W, ell_r)
    fvals[:, 3] = np.einsum("elmc,m->elc", W, ell_l)
    tidx = np.nonzero(mask)[0]
    if tidx.size == 0:
        return fvals
    Wt = W[tidx]
    # xi sweeps: west/east faces
    ext = _extend_lines(Wt, nbr[tidx, 3], nbr[tidx, 1])
    right, left = nnw_line_states(ext, bdist[tidx, 3], bdist[tidx, 1], nodes, fp, limit)
    fvals[tidx, 3] = right[..., 0, :]
    fvals[tidx, 1] = left[..., -1, :]
    # eta sweeps: south/north faces
    ext = _extend_lines(Wt.transpose(0, 2, 1, 3), nbr[tidx, 0], nbr[tidx, 2])
    right, left = nnw_line_states(ext, bdist[tidx, 0], bdist[tidx, 2], nodes, fp, limit)
    fvals[tidx, 0] = right[..., 0, :]
    fvals[tidx, 2] = left[..., -1, :]
    return fvals


def face_riemann(fvals, fA_e, fA_f, fB_e, fB_f, fB_axis, fnorm, btag,
                 bc_face_state, fpos_x, t, dmr_post, dmr_pre):
    """One LLF flux per face flux point, in the A-side outward normal."""
    valA = fvals[fA_e, fA_f]                                 # (nf, n, 4)
    safe_e = np.where(fB_e >= 0, fB_e, 0)
    valB = np.take_along_axis(fvals[safe_e, fB_f], fB_axis[..., None], axis=1)
    bdry = btag >= 0
    if np.any(bdry):
        rows = np.nonzero(bdry)[0]
        n = valA.shape[1]
        kind_rows = np.repeat(btag[rows], n)
        normal = np.repeat(fnorm[rows], n, axis=0)
        ghost = _ghost(kind_rows, valA[rows].reshape(-1, 4), normal,
                       fpos_x[rows].reshape(-1), t,
                       bc_face_state[rows].reshape(-1, 4), dmr_post, dmr_pre)
        valB[rows] = ghost.reshape(-1, n, 4)
    return _llf_prim(valA, valB, fnorm[:, None, 0], fnorm[:, None, 1])


def gather_face_flux(fhat, ef_id, ef_sign, ef_scale, ef_param):
    """Transformed +axis-sense face fluxes per (element, face, own axis index)."""
    fh = fhat[ef_id]                                          # (ne, 4, n, 4)
    fh = np.take_along_axis(fh, ef_param[..., None], axis=2)
    return (ef_sign * ef_scale)[..., None, None] * fh


def cpr_residual(U, W, mask, ax, ay, bx, by, D, ell_l, ell_r, gl, gr,
                 fh_elem, out):
    """Batched CPR dU~/dt written into ``out`` (all elements; troubled rows
    are overwritten afterwards by the subcell kernel)."""
    rho_u = U[..., 1]
    rho_v = U[..., 2]
    p = W[..., 3]
    u = W[..., 1]
    v = W[..., 2]
    Ep = U[..., 3] + p
    F = np.stack((rho_u, rho_u * u + p, rho_v * u, Ep * u), axis=-1)
    G = np.stack((rho_v, rho_u * v, rho_v * v + p, Ep * v), axis=-1)
    Ft = ax[..., None] * F + ay[..., None] * G
    Gt = bx[..., None] * F + by[..., None] * G
    dF = np.einsum("km,elmc->elkc", D, Ft)
    dG = np.einsum("lm,emkc->elkc", D, Gt)
    ft_w = np.einsum("elmc,m->elc", Ft, ell_l)
    ft_e = np.einsum("elmc,m->elc", Ft, ell_r)
    gt_s = np.einsum("emkc,m->ekc", Gt, ell_l)
    gt_n = np.einsum("emkc,m->ekc", Gt, ell_r)
    corr = (
        (fh_elem[:, 3] - ft_w)[:, :, None, :] * gl[None, None, :, None]
        + (fh_elem[:, 1] - ft_e)[:, :, None, :] * gr[None, None, :, None]
        + (fh_elem[:, 0] - gt_s)[:, None, :, :] * gl[None, :, None, None]
        + (fh_elem[:, 2] - gt_n)[:, None, :, :] * gr[None, :, None, None]
    )
    out[:] = -dF - dG - corr
    return out


def cnnw2_residual(W, mask, nbr, fh_elem, sx_ax, sx_ay, sy_bx, sy_by,
                   nodes, wts, fp, bdist, limit, out):
    """Subcell finite-difference dU~/dt for the troubled elements."""
    tidx = np.nonzero(mask)[0]
    if tidx.size == 0:
        return out
    n = W.shape[1]
    Wt = W[tidx]

    # xi direction
    ext = _extend_lines(Wt, nbr[tidx, 3], nbr[tidx, 1])
    right, left = nnw_line_states(ext, bdist[tidx, 3], bdist[tidx, 1], nodes, fp, limit)
    fh = np.empty((tidx.size, n, n + 1, 4))
    fh[:, :, 0] = fh_elem[tidx, 3]
    fh[:, :, n] = fh_elem[tidx, 1]
    for i in range(1, n):
        a1 = sx_ax[tidx, :, i]
        a2 = sx_ay[tidx, :, i]
        s = np.hypot(a1, a2)
        fh[:, :, i] = s[..., None] * _llf_prim(left[:, :, i - 1], right[:, :, i],
                                               a1 / s, a2 / s)
    res = -(fh[:, :, 1:] - fh[:, :, :-1]) / wts[None, None, :, None]

    # eta direction
    ext = _extend_lines(Wt.transpose(0, 2, 1, 3), nbr[tidx, 0], nbr[tidx, 2])
    right, left = nnw_line_states(ext, bdist[tidx, 0], bdist[tidx, 2], nodes, fp, limit)
    gh = np.empty((tidx.size, n, n + 1, 4))
    gh[:, :, 0] = fh_elem[tidx, 0]
    gh[:, :, n] = fh_elem[tidx, 2]
    for j in range(1, n):
        b1 = sy_bx[tidx, :, j]
        b2 = sy_by[tidx, :, j]
        s = np.hypot(b1, b2)
        gh[:, :, j] = s[..., None] * _llf_prim(left[:, :, j - 1], right[:, :, j],
                                               b1 / s, b2 / s)
    res += -(gh[:, :, 1:] - gh[:, :, :-1]).transpose(0, 2, 1, 3) / wts[None, :, None, None]

    out[tidx] = res
    return out


def _roe(WL, WR, printed):
    sL = np.sqrt(WL[..., 0])
    sR = np.sqrt(WR[..., 0])
    wsum = sL + sR
    rho = sL * sR
    u = (sL * WL[..., 1] + sR * WR[..., 1]) / wsum
    v = (sL * WL[..., 2] + sR * WR[..., 2]) / wsum
    gg = GAMMA / (GAMMA - 1.0)
    hL = gg * WL[..., 3] / WL[..., 0] + 0.5 * (WL[..., 1] ** 2 + WL[..., 2] ** 2)
    hR = gg * WR[..., 3] / WR[..., 0] + 0.5 * (WR[..., 1] ** 2 + WR[..., 2] ** 2)
    h = (sL * hL + sR * hR) / wsum
    hterm = h * h if printed else rho * h
    p = (hterm - 0.5 * rho * (u * u + v * v)) / gg
    return np.stack((rho, u, v, p), axis=-1)


def _line_energy(modal):
    top = modal[..., -1] ** 2
    total = np.einsum("...m,...m->...", modal, modal)
    rest = total - top
    e1 = np.where(total > 0, top / np.where(total > 0, total, 1.0), 0.0)
    e2 = np.where(rest > 0, modal[..., -2] ** 2 / np.where(rest > 0, rest, 1.0), 0.0)
    return np.maximum(e1, e2)


def detect(W, nbr, Kin, Kaug, thr_orig, thr_aug, improved, var_rhop, roe_printed):
    """Troubled mask and per-element max energy ratio, line-wise scan."""
    ne, n = W.shape[0], W.shape[1]
    if var_rhop:
        det = W[..., 0] * W[..., 3]
    else:
        det = W[..., 0]
    if not improved:
        mx = np.einsum("mp,elp->elm", Kin, det)
        e_xi = _line_energy(mx).max(axis=1)
        my = np.einsum("mp,ekp->ekm", Kin, det.transpose(0, 2, 1))
        e_eta = _line_energy(my).max(axis=1)
        emax = np.maximum(e_xi, e_eta)
        return (emax > thr_orig).astype(np.int8), emax

    def detvar(Wr):
        return Wr[..., 0] * Wr[..., 3] if var_rhop else Wr[..., 0]

    lines_xi = np.concatenate([
        detvar(_roe(W[:, :, 0, :], nbr[:, 3], roe_printed))[..., None],
        det,
        detvar(_roe(W[:, :, n - 1, :], nbr[:, 1], roe_printed))[..., None],
    ], axis=-1)
    lines_eta = np.concatenate([
        detvar(_roe(W[:, 0, :, :], nbr[:, 0], roe_printed))[..., None],
        det.transpose(0, 2, 1),
        detvar(_roe(W[:, n - 1, :, :], nbr[:, 2], roe_printed))[..., None],
    ], axis=-1)
    ex = _line_energy(np.einsum("mp,elp->elm", Kaug, lines_xi)).max(axis=1)
    ey = _line_energy(np.einsum("mp,ekp->ekm", Kaug, lines_eta)).max(axis=1)
    emax = np.maximum(ex, ey)
    return (emax > thr_aug).astype(np.int8), emax


def local_dt(W, jac, wmin2d):
    """Per-element min of (subcell width / max wave speed)."""
    lam = np.hypot(W[..., 1], W[..., 2]) + np.sqrt(GAMMA * W[..., 3] / W[..., 0])
    hsub = wmin2d[None, :, :] * np.sqrt(jac)
    return (hsub / lam).min(axis=(1, 2))
