"""Second-order shock-capturing machinery on the nonuniform subcell grid.

A troubled element is split, per direction, into N+1 subcells whose lengths
are the Gauss weights; each subcell contains exactly one solution point.
Face values at the subcell interfaces come from a three-point nonlinear
weighted interpolation: inverse-distance first layer, blended one-sided
gradient, then a Barth-limited linear reconstruction.

The functions here are the plain (scalar / per-line) forms.  The batched
per-mesh versions live in :mod:`subflux.kernels`.
"""

from dataclasses import dataclass

import numpy as np

from .physics import llf_flux, prim_to_cons


def flux_points(weights):
    """Subcell interface coordinates: fp[0] = -1, fp[i+1]-fp[i] = w[i].

    The weights sum to 2, so the last flux point lands on +1.
    """
    w = np.asarray(weights, dtype=float)
    fp = np.empty(w.size + 1)
    fp[0] = -1.0
    np.cumsum(w, out=fp[1:])
    fp[1:] -= 1.0
    return fp


@dataclass
class NNWStencil:
    """Three solution values around one subcell plus point-to-flux-point gaps.

    d1..d4 are the reference-space gaps (u1->A, A->u2, u2->B, B->u3).  When a
    stencil touches an element interface, ``phys_a`` / ``phys_b`` carry the
    physical-space (neighbor, own) distance pair that replaces the first-layer
    gaps on that side.
    """

    u1: float
    u2: float
    u3: float
    d1: float
    d2: float
    d3: float
    d4: float
    phys_a: tuple | None = None
    phys_b: tuple | None = None


def inverse_distance_weights(d1, d2):
    """Normalized (1/d1, 1/d2) weights; equivalent to linear interpolation."""
    w1 = d2 / (d1 + d2)
    return w1, 1.0 - w1


def physical_distance_weights(d_nbr, d_own):
    """First-layer weights from physical distances at an element interface."""
    if d_nbr <= 0.0 or d_own <= 0.0:
        raise ValueError("distances must be positive")
    return inverse_distance_weights(d_nbr, d_own)


def first_layer_interp(stencil: NNWStencil):
    """Interface values (u_A, u_B) from inverse-distance interpolation."""
    da1, da2 = stencil.phys_a if stencil.phys_a is not None else (stencil.d1, stencil.d2)
    db3, db4 = stencil.phys_b if stencil.phys_b is not None else (stencil.d3, stencil.d4)
    wa1, wa2 = inverse_distance_weights(da1, da2)
    wb3, wb4 = inverse_distance_weights(db3, db4)
    return wa1 * stencil.u1 + wa2 * stencil.u2, wb3 * stencil.u2 + wb4 * stencil.u3


def nnw_gradient(u_a, u2, u_b, d2, d3):
    """Inverse-distance blend of the two one-sided differences."""
    w5, w6 = inverse_distance_weights(d2, d3)
    return w5 * (u2 - u_a) / d2 + w6 * (u_b - u2) / d3


def barth_limit(u1, u2, u3, u_a2, u_b2):
    """Barth limiter factor for the two unlimited reconstructions."""
    m = min(u1, u2, u3)
    big = max(u1, u2, u3)

    def lim(u):
        if u > u2:
            return min(1.0, (big - u2) / (u - u2))
        if u < u2:
            return min(1.0, (m - u2) / (u - u2))
        return 1.0

    return min(lim(u_a2), lim(u_b2))


def nnw_face_values(stencil: NNWStencil):
    """Limited reconstructed values (u_A^R, u_B^L) at the two subcell faces."""
    u_a1, u_b1 = first_layer_interp(stencil)
    grad = nnw_gradient(u_a1, stencil.u2, u_b1, stencil.d2, stencil.d3)
    u_a2 = stencil.u2 - grad * stencil.d2
    u_b2 = stencil.u2 + grad * stencil.d3
    phi = barth_limit(stencil.u1, stencil.u2, stencil.u3, u_a2, u_b2)
    return stencil.u2 - phi * grad * stencil.d2, stencil.u2 + phi * grad * stencil.d3


def nnw_line_states(u, u_left, u_right, nodes, fp, phys_left=None, phys_right=None):
    """Reconstructed states on both sides of every subcell face of one line.

    u: (n, m) nodal values; u_left/u_right: (m,) nearest neighbor values across
    the element interfaces; phys_left/phys_right: physical (d_nbr, d_own)
    pairs for the interface-adjacent first layer.

    Returns (right, left): right[k] is the limited value at flux point k seen
    from subcell k (k = 0..n-1), left[k] the value at flux point k+1 seen from
    the same subcell.  Components are limited independently.
    """
    u = np.asarray(u, dtype=float)
    n, m = u.shape
    right = np.empty((n, m))
    left = np.empty((n, m))
    for k in range(n):
        u1 = u[k - 1] if k > 0 else np.asarray(u_left, dtype=float)
        u2 = u[k]
        u3 = u[k + 1] if k < n - 1 else np.asarray(u_right, dtype=float)
        d2 = nodes[k] - fp[k]
        d3 = fp[k + 1] - nodes[k]
        if k > 0:
            ua1 = _idw(u1, u2, fp[k] - nodes[k - 1], d2)
        else:
            ua1 = _idw(u1, u2, *phys_left) if phys_left is not None else _idw(u1, u2, d2, d2)
        if k < n - 1:
            ub1 = _idw(u2, u3, d3, nodes[k + 1] - fp[k + 1])
        else:
            ub1 = _idw(u2, u3, *phys_right) if phys_right is not None else _idw(u2, u3, d3, d3)
        w5, w6 = inverse_distance_weights(d2, d3)
        grad = w5 * (u2 - ua1) / d2 + w6 * (ub1 - u2) / d3
        lo = np.minimum(np.minimum(u1, u2), u3)
        hi = np.maximum(np.maximum(u1, u2), u3)
        phi = np.minimum(_lim_vec(u2, lo, hi, u2 - grad * d2), _lim_vec(u2, lo, hi, u2 + grad * d3))
        right[k] = u2 - phi * grad * d2
        left[k] = u2 + phi * grad * d3
    return right, left


def _idw(ua, ub, da, db):
    wa = db / (da + db)
    return wa * ua + (1.0 - wa) * ub


def _lim_vec(u2, lo, hi, val):
    d = val - u2
    out = np.ones_like(np.asarray(d, dtype=float))
    up = d > 0
    dn = d < 0
    out[up] = np.minimum(1.0, (hi - u2)[up] / d[up])
    out[dn] = np.minimum(1.0, (lo - u2)[dn] / d[dn])
    return out


def cnnw2_residual_element(W, nbr_W, face_flux, corners, basis, bdist):
    """Reference (single-element) subcell finite-difference residual dU~/dt.

    W: (n, n, 4) primitive states at the solution points, indexed [eta, xi].
    nbr_W: (4, n, 4) nearest neighbor primitive states per local face, indexed
    by the element's own axis index along that face.
    face_flux: (4, n, 4) transformed Riemann fluxes at the element faces in
    the +axis sense (already scaled; supplied by the caller's coupling rule).
    corners: (4, 2) physical corner coordinates (CCW).
    bdist: (4, n, 2) physical (neighbor, own) distance pairs at the faces.

    Both sweep directions use the same 1D construction; interior subcell
    interfaces get a local Lax-Friedrichs flux on the spot.
    """
    from .mesh import bilinear_coeffs, metric_terms

    nodes = basis.points.nodes
    n = nodes.size
    fp = flux_points(basis.points.weights)
    coeff = bilinear_coeffs(corners)
    out = np.zeros((n, n, 4))

    for l in range(n):  # xi sweeps along each eta line
        right, left = nnw_line_states(
            W[l], nbr_W[3, l], nbr_W[1, l], nodes, fp,
            phys_left=bdist[3, l], phys_right=bdist[1, l],
        )
        fhat = np.empty((n + 1, 4))
        fhat[0] = face_flux[3, l]
        fhat[n] = face_flux[1, l]
        for i in range(1, n):
            ax, ay, _, _, _ = metric_terms(coeff, fp[i], nodes[l])
            s = np.hypot(ax, ay)
            nvec = np.array([ax / s, ay / s])
            fhat[i] = s * llf_flux(prim_to_cons(left[i - 1]), prim_to_cons(right[i]), nvec)
        out[l] -= (fhat[1:] - fhat[:-1]) / basis.points.weights[:, None]

    for k in range(n):  # eta sweeps along each xi line
        right, left = nnw_line_states(
            W[:, k], nbr_W[0, k], nbr_W[2, k], nodes, fp,
            phys_left=bdist[0, k], phys_right=bdist[2, k],
        )
        ghat = np.empty((n + 1, 4))
        ghat[0] = face_flux[0, k]
        ghat[n] = face_flux[2, k]
        for j in range(1, n):
            _, _, bx, by, _ = metric_terms(coeff, nodes[k], fp[j])
            s = np.hypot(bx, by)
            nvec = np.array([bx / s, by / s])
            ghat[j] = s * llf_flux(prim_to_cons(left[j - 1]), prim_to_cons(right[j]), nvec)
        out[:, k] -= (ghat[1:] - ghat[:-1]) / basis.points.weights[:, None]

    return out
