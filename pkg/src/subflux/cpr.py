"""High-order CPR spatial residual on a single element.

The discrete solution lives at tensor-product Gauss points.  Transformed
fluxes are interpolated by Lagrange polynomials and differentiated line by
line; interface Riemann-flux jumps are lifted into the element through the
derivative of the g_DG correction functions.

These single-element routines are the readable reference; the batched
versions used by the time loop live in :mod:`subflux.kernels`.
"""

import numpy as np

from .physics import cons_to_prim, flux_f, flux_g


def interface_trace(W, lagrange, face):
    """Primitive states interpolated to one face, indexed by own axis index.

    W: (n, n, 4) primitives at the solution points, [eta, xi].  Face numbering
    is 0 south, 1 east, 2 north, 3 west; entry j of the result sits on the
    j-th grid line crossing that face.
    """
    ell_l, ell_r = lagrange.ell_left, lagrange.ell_right
    if face == 3:
        return np.einsum("lmc,m->lc", W, ell_l)
    if face == 1:
        return np.einsum("lmc,m->lc", W, ell_r)
    if face == 0:
        return np.einsum("mkc,m->kc", W, ell_l)
    if face == 2:
        return np.einsum("mkc,m->kc", W, ell_r)
    raise ValueError(f"face must be 0..3, got {face}")


def element_traces(U, lagrange):
    """Traces on all four faces from a conservative element solution."""
    W = cons_to_prim(U)
    return np.stack([interface_trace(W, lagrange, f) for f in range(4)])


def cpr_residual(U, face_flux, metrics_elem, basis):
    """Semi-discrete dU~/dt of one element.

    U: (n, n, 4) conservative states.  face_flux: (4, n, 4) transformed
    Riemann fluxes at the faces, oriented in the +axis sense and indexed by
    the element's own axis index.  metrics_elem: (ax, ay, bx, by) arrays of
    shape (n, n) each.
    """
    ax, ay, bx, by = metrics_elem
    D = basis.lagrange.diff
    ell_l, ell_r = basis.lagrange.ell_left, basis.lagrange.ell_right
    gl, gr = basis.correction.gl_deriv, basis.correction.gr_deriv

    F = flux_f(U)
    G = flux_g(U)
    Ft = ax[..., None] * F + ay[..., None] * G
    Gt = bx[..., None] * F + by[..., None] * G

    dF = np.einsum("km,lmc->lkc", D, Ft)
    dG = np.einsum("lm,mkc->lkc", D, Gt)

    # own interpolated transformed fluxes at the faces
    ft_w = np.einsum("lmc,m->lc", Ft, ell_l)
    ft_e = np.einsum("lmc,m->lc", Ft, ell_r)
    gt_s = np.einsum("mkc,m->kc", Gt, ell_l)
    gt_n = np.einsum("mkc,m->kc", Gt, ell_r)

    corr = (
        (face_flux[3] - ft_w)[:, None, :] * gl[None, :, None]
        + (face_flux[1] - ft_e)[:, None, :] * gr[None, :, None]
        + (face_flux[0] - gt_s)[None, :, :] * gl[:, None, None]
        + (face_flux[2] - gt_n)[None, :, :] * gr[:, None, None]
    )
    return -dF - dG - corr
