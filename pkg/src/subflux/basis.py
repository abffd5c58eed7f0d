"""1D spectral machinery on Gauss-Legendre solution points.

Provides quadrature nodes/weights, Lagrange interpolation and differentiation
tables, the g_DG correction-function derivative tables, and the
nodal->modal transform matrices used by the troubled-cell detector.

All tables are plain float64 ndarrays, immutable by convention after setup.
"""

from dataclasses import dataclass
from functools import lru_cache

import mpmath as mp
import numpy as np
from numpy.polynomial import legendre as npleg

MAX_DEGREE = 6


@dataclass(frozen=True)
class SolutionPoints1D:
    """Gauss-Legendre points/weights for polynomial degree ``degree``."""

    degree: int
    nodes: np.ndarray       # (N+1,), strictly increasing in (-1, 1)
    weights: np.ndarray     # (N+1,), sum to 2


@dataclass(frozen=True)
class LagrangeBasis1D:
    nodes: np.ndarray
    bary: np.ndarray        # barycentric weights
    diff: np.ndarray        # (n, n): diff[i, j] = L_j'(x_i)
    ell_left: np.ndarray    # (n,): L_j(-1)
    ell_right: np.ndarray   # (n,): L_j(+1)


@dataclass(frozen=True)
class CorrectionTable:
    """g_DG correction-function derivatives at the solution points."""

    degree: int
    gl_deriv: np.ndarray    # g_L'(x_k)
    gr_deriv: np.ndarray    # g_R'(x_k)


@dataclass(frozen=True)
class ModalTransform:
    """Nodal -> orthonormal-Legendre modal transform matrices.

    ``interior`` maps the N+1 solution-point values to modes 0..N.
    ``augmented`` maps the N+3 values on {-1, nodes, +1} to modes 0..N+2,
    used by the interface-augmented detector.
    """

    degree: int
    interior: np.ndarray    # (N+1, N+1)
    augmented: np.ndarray   # (N+3, N+3)
    aug_nodes: np.ndarray   # (N+3,)


def gauss_legendre(n: int) -> SolutionPoints1D:
    """Gauss-Legendre rule with ``n`` points (degree N = n-1 basis)."""
    if n < 1:
        raise ValueError("need at least one point")
    nodes, weights = npleg.leggauss(n)
    return SolutionPoints1D(degree=n - 1, nodes=nodes, weights=weights)


def barycentric_weights(nodes):
    nodes = np.asarray(nodes, dtype=float)
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / np.prod(diff, axis=1)


def lagrange_eval_vector(nodes, x, bary=None):
    """Row vector v with f(x) = v @ f(nodes) for the degree-N interpolant."""
    nodes = np.asarray(nodes, dtype=float)
    if bary is None:
        bary = barycentric_weights(nodes)
    d = x - nodes
    hit = np.nonzero(d == 0.0)[0]
    if hit.size:
        v = np.zeros_like(nodes)
        v[hit[0]] = 1.0
        return v
    w = bary / d
    return w / w.sum()


def lagrange_interp(values, nodes, x):
    """Evaluate the interpolant of ``values`` at ``x`` (scalar)."""
    return float(lagrange_eval_vector(nodes, x) @ np.asarray(values, dtype=float))


def lagrange_basis(nodes) -> LagrangeBasis1D:
    nodes = np.asarray(nodes, dtype=float)
    bary = barycentric_weights(nodes)
    n = nodes.size
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                D[i, j] = (bary[j] / bary[i]) / (nodes[i] - nodes[j])
        D[i, i] = -D[i].sum()
    return LagrangeBasis1D(
        nodes=nodes,
        bary=bary,
        diff=D,
        ell_left=lagrange_eval_vector(nodes, -1.0, bary),
        ell_right=lagrange_eval_vector(nodes, 1.0, bary),
    )


def _legendre_series(deg):
    c = np.zeros(deg + 1)
    c[deg] = 1.0
    return c


def correction_value(degree, x, side="left"):
    """Value of the g_DG correction function at x.

    g_L = (-1)^N (P_N - P_{N+1})/2 (the right Radau polynomial), g_R(x) = g_L(-x).
    """
    sign = -1.0 if degree % 2 else 1.0
    if side == "right":
        x = -np.asarray(x, dtype=float)
    pn = npleg.legval(x, _legendre_series(degree))
    pn1 = npleg.legval(x, _legendre_series(degree + 1))
    return sign * 0.5 * (pn - pn1)


def correction_table(degree: int, nodes) -> CorrectionTable:
    if degree < 1:
        raise ValueError("degree must be >= 1")
    nodes = np.asarray(nodes, dtype=float)
    sign = -1.0 if degree % 2 else 1.0
    dpn = npleg.legder(_legendre_series(degree))
    dpn1 = npleg.legder(_legendre_series(degree + 1))
    gl = sign * 0.5 * (npleg.legval(nodes, dpn) - npleg.legval(nodes, dpn1))
    # g_R(x) = g_L(-x)  =>  g_R'(x) = -g_L'(-x)
    gr = -(sign * 0.5 * (npleg.legval(-nodes, dpn) - npleg.legval(-nodes, dpn1)))
    return CorrectionTable(degree=degree, gl_deriv=gl, gr_deriv=gr)


def orthonormal_legendre(j, x):
    """L~_j(x) = sqrt((2j+1)/2) P_j(x), orthonormal on [-1, 1]."""
    return np.sqrt((2 * j + 1) / 2.0) * npleg.legval(np.asarray(x, dtype=float), _legendre_series(j))


def _inverse_vandermonde(nodes, dps=50):
    """Inverse of V[i, j] = L~_j(nodes[i]) computed in extended precision."""
    n = len(nodes)
    with mp.workdps(dps):
        V = mp.matrix(n, n)
        for i, x in enumerate(nodes):
            xm = mp.mpf(float(x))
            for j in range(n):
                V[i, j] = mp.sqrt(mp.mpf(2 * j + 1) / 2) * mp.legendre(j, xm)
        Vinv = V ** -1
        out = np.array([[float(Vinv[i, j]) for j in range(n)] for i in range(n)])
    return out


def modal_transform(degree: int, nodes) -> ModalTransform:
    nodes = np.asarray(nodes, dtype=float)
    aug = np.concatenate(([-1.0], nodes, [1.0]))
    return ModalTransform(
        degree=degree,
        interior=_inverse_vandermonde(nodes),
        augmented=_inverse_vandermonde(aug),
        aug_nodes=aug,
    )


def modal_coefficients(values, transform, augmented=False):
    """Modal vector m of the interpolant of ``values`` (orthonormal Legendre)."""
    mat = transform.augmented if augmented else transform.interior
    values = np.asarray(values, dtype=float)
    if values.shape[-1] != mat.shape[0]:
        raise ValueError("value count does not match transform size")
    return values @ mat.T


@dataclass(frozen=True)
class ElementBasis:
    """All 1D tables for one polynomial degree, bundled."""

    degree: int
    points: SolutionPoints1D
    lagrange: LagrangeBasis1D
    correction: CorrectionTable
    modal: ModalTransform


@lru_cache(maxsize=None)
def element_basis(degree: int) -> ElementBasis:
    if not 1 <= degree <= MAX_DEGREE:
        raise ValueError(f"degree must be in [1, {MAX_DEGREE}]")
    pts = gauss_legendre(degree + 1)
    return ElementBasis(
        degree=degree,
        points=pts,
        lagrange=lagrange_basis(pts.nodes),
        correction=correction_table(degree, pts.nodes),
        modal=modal_transform(degree, pts.nodes),
    )
