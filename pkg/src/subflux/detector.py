"""Troubled-cell detection from the energy decay of modal coefficients.

A grid line of nodal data is transformed to orthonormal-Legendre modes; the
fraction of energy in the top two modes is compared to a degree-dependent
threshold.  The improved variant appends density-weighted (Roe) interface
averages on both ends of the line, raising the polynomial degree by two,
which lets the indicator see discontinuities sitting exactly on element
interfaces.
"""

from dataclasses import dataclass

import numpy as np

from .physics import roe_average

DEFAULT_A = 0.5
DEFAULT_C = 1.8


@dataclass
class IndicatorConfig:
    a: float = DEFAULT_A
    c: float = DEFAULT_C
    mode: str = "improved"          # "original" | "improved"
    variable: str = "rho"           # "rho" | "rhop"
    roe_pressure: str = "printed"   # "printed" | "standard"

    def __post_init__(self):
        if self.a <= 0 or self.c <= 0:
            raise ValueError("threshold constants must be positive")
        if self.mode not in ("original", "improved"):
            raise ValueError(f"unknown indicator mode {self.mode!r}")
        if self.variable not in ("rho", "rhop"):
            raise ValueError(f"unknown detection variable {self.variable!r}")


def threshold(n_eff: int, a: float = DEFAULT_A, c: float = DEFAULT_C) -> float:
    """Troubled-cell threshold a * 10^(-c * (N+1)^(1/4)) for degree N."""
    return a * 10.0 ** (-c * (n_eff + 1) ** 0.25)


def energy_ratio(modal) -> float:
    """Share of the top (and second-from-top) mode in the modal energy.

    An all-zero vector is defined as perfectly smooth (ratio 0); the
    second-mode term is likewise dropped when its denominator vanishes.
    """
    m = np.asarray(modal, dtype=float)
    total = float(m @ m)
    if total == 0.0:
        return 0.0
    top = m[-1] ** 2
    rest = total - top
    e1 = top / total
    e2 = (m[-2] ** 2 / rest) if rest > 0.0 else 0.0
    return max(e1, e2)


def detection_values(W, cfg: IndicatorConfig):
    """Scalar detection variable from primitive states (component axis last)."""
    W = np.asarray(W, dtype=float)
    if cfg.variable == "rho":
        return W[..., 0]
    return W[..., 0] * W[..., 3]


def detect(W, nbr_W, modal, cfg: IndicatorConfig):
    """Troubled flag and max line energy ratio for one element.

    W: (n, n, 4) primitive states indexed [eta, xi].  nbr_W: (4, n, 4) nearest
    neighbor primitive states per face (required in improved mode only).
    """
    n = W.shape[0]
    if cfg.mode == "original":
        mat = modal.interior
        thr = threshold(modal.degree, cfg.a, cfg.c)
        det = detection_values(W, cfg)
        lines = [det[l, :] for l in range(n)] + [det[:, k] for k in range(n)]
    else:
        mat = modal.augmented
        thr = threshold(modal.degree + 2, cfg.a, cfg.c)
        lines = []
        for l in range(n):  # xi lines: west/east ends
            lo = roe_average(W[l, 0], nbr_W[3, l], cfg.roe_pressure)
            hi = roe_average(W[l, n - 1], nbr_W[1, l], cfg.roe_pressure)
            vals = detection_values(np.vstack([lo, W[l], hi]), cfg)
            lines.append(vals)
        for k in range(n):  # eta lines: south/north ends
            lo = roe_average(W[0, k], nbr_W[0, k], cfg.roe_pressure)
            hi = roe_average(W[n - 1, k], nbr_W[2, k], cfg.roe_pressure)
            vals = detection_values(np.vstack([lo, W[:, k], hi]), cfg)
            lines.append(vals)
    emax = max(energy_ratio(mat @ ln) for ln in lines)
    return emax > thr, emax
