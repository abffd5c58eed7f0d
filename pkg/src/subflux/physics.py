"""Euler-equation state algebra: conversions, fluxes, wave speeds, Riemann flux.

Conservative vector ordering is (rho, rho*u, rho*v, E) throughout the package.
All functions accept either a single state of shape (4,) or batches with the
component axis last, shape (..., 4).
"""

import numpy as np

GAMMA = 1.4


class InvalidStateError(ValueError):
    """Raised when a state has nonpositive density or pressure."""


def cons_to_prim(U):
    """Convert conservative (rho, rho*u, rho*v, E) to primitive (rho, u, v, p)."""
    U = np.asarray(U, dtype=float)
    rho = U[..., 0]
    if np.any(rho <= 0.0) or not np.all(np.isfinite(rho)):
        raise InvalidStateError("nonpositive or non-finite density")
    u = U[..., 1] / rho
    v = U[..., 2] / rho
    p = (GAMMA - 1.0) * (U[..., 3] - 0.5 * rho * (u * u + v * v))
    if np.any(p <= 0.0):
        raise InvalidStateError("nonpositive pressure")
    return np.stack((rho, u, v, p), axis=-1)


def prim_to_cons(W):
    W = np.asarray(W, dtype=float)
    rho, u, v, p = W[..., 0], W[..., 1], W[..., 2], W[..., 3]
    E = p / (GAMMA - 1.0) + 0.5 * rho * (u * u + v * v)
    return np.stack((rho, rho * u, rho * v, E), axis=-1)


def sound_speed(W):
    W = np.asarray(W, dtype=float)
    return np.sqrt(GAMMA * W[..., 3] / W[..., 0])


def flux_f(U):
    """Physical x-flux of the conservative state."""
    W = cons_to_prim(U)
    rho, u, v, p = W[..., 0], W[..., 1], W[..., 2], W[..., 3]
    E = np.asarray(U, dtype=float)[..., 3]
    return np.stack((rho * u, rho * u * u + p, rho * u * v, u * (E + p)), axis=-1)


def flux_g(U):
    """Physical y-flux of the conservative state."""
    W = cons_to_prim(U)
    rho, u, v, p = W[..., 0], W[..., 1], W[..., 2], W[..., 3]
    E = np.asarray(U, dtype=float)[..., 3]
    return np.stack((rho * v, rho * u * v, rho * v * v + p, v * (E + p)), axis=-1)


def flux_normal(U, n):
    """Projected flux n_x*F + n_y*G for a unit normal n = (n_x, n_y)."""
    n = np.asarray(n, dtype=float)
    return n[..., 0, None] * flux_f(U) + n[..., 1, None] * flux_g(U)


def max_wave_speed(U):
    """|V| + c, the fastest signal speed of a state (used for CFL)."""
    W = cons_to_prim(U)
    return np.hypot(W[..., 1], W[..., 2]) + sound_speed(W)


def llf_flux(UL, UR, n):
    """Local Lax-Friedrichs flux for unit normal n.

    0.5*(F_n(UL) + F_n(UR)) - 0.5*lam*(UR - UL) with
    lam = max(|V_L.n| + c_L, |V_R.n| + c_R).
    """
    UL = np.asarray(UL, dtype=float)
    UR = np.asarray(UR, dtype=float)
    n = np.asarray(n, dtype=float)
    WL, WR = cons_to_prim(UL), cons_to_prim(UR)
    vnL = WL[..., 1] * n[..., 0] + WL[..., 2] * n[..., 1]
    vnR = WR[..., 1] * n[..., 0] + WR[..., 2] * n[..., 1]
    lam = np.maximum(np.abs(vnL) + sound_speed(WL), np.abs(vnR) + sound_speed(WR))
    return 0.5 * (flux_normal(UL, n) + flux_normal(UR, n)) - 0.5 * lam[..., None] * (UR - UL)


def roe_average(WL, WR, pressure_form="printed"):
    """Density-weighted interface average of two primitive states.

    rho is the geometric mean; u, v and total enthalpy h are sqrt(rho)-weighted
    means.  The pressure recovered from the averaged quantities comes in two
    forms: ``printed`` uses (h^2 - rho*V^2/2)*(gamma-1)/gamma, ``standard``
    the dimensionally consistent (rho*h - rho*V^2/2)*(gamma-1)/gamma.
    """
    WL = np.asarray(WL, dtype=float)
    WR = np.asarray(WR, dtype=float)
    rL, rR = WL[..., 0], WR[..., 0]
    sL, sR = np.sqrt(rL), np.sqrt(rR)
    wsum = sL + sR
    rho = sL * sR
    u = (sL * WL[..., 1] + sR * WR[..., 1]) / wsum
    v = (sL * WL[..., 2] + sR * WR[..., 2]) / wsum
    hL = (GAMMA / (GAMMA - 1.0)) * WL[..., 3] / rL + 0.5 * (WL[..., 1] ** 2 + WL[..., 2] ** 2)
    hR = (GAMMA / (GAMMA - 1.0)) * WR[..., 3] / rR + 0.5 * (WR[..., 1] ** 2 + WR[..., 2] ** 2)
    h = (sL * hL + sR * hR) / wsum
    v2 = u * u + v * v
    if pressure_form == "printed":
        p = (h * h - 0.5 * rho * v2) * (GAMMA - 1.0) / GAMMA
    elif pressure_form == "standard":
        p = (rho * h - 0.5 * rho * v2) * (GAMMA - 1.0) / GAMMA
    else:
        raise ValueError(f"unknown pressure_form {pressure_form!r}")
    return np.stack((rho, u, v, p), axis=-1)
