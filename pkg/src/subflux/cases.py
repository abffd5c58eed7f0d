"""Benchmark case definitions, exact solutions, error norms, convergence runs.

Each case carries its domain, final time, vectorized initializer (primitive
output), the boundary-tag map consumed by the driver, and a default mesh plan
for the built-in strip generator.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .driver import Solver, SolverConfig
from .mesh import make_strip_mesh
from .physics import GAMMA

CASE_NAMES = ("vortex", "sod", "lax", "shu_osher", "riemann2d",
              "double_mach", "shock_vortex", "strong_shock_vortex")


class RiemannVacuumError(RuntimeError):
    """The two states would generate a vacuum region."""


@dataclass
class CaseSpec:
    name: str
    domain: tuple           # (x0, x1, y0, y1)
    t_end: float
    initializer: object      # (x, y) -> primitive (..., 4)
    bc_map: dict            # boundary tag -> kind name
    mesh_plan: dict         # nx, ny, jitter, side_tags, periodic
    dmr_states: tuple | None = None
    exact: object = None     # (x, y, t) -> primitive (..., 4)
    slice_y: float | None = None


def _stack(rho, u, v, p):
    return np.stack(np.broadcast_arrays(rho, u, v, p), axis=-1).astype(float)


# ------------------------------------------------------------------ vortex
VORTEX_EPS = 5.0
VORTEX_MEAN = (1.0, 1.0, 0.0, 1.0)


def _vortex_init(x, y, xc=0.0, yc=0.0):
    """Isentropic vortex superposed on a (1, 1, 0, 1) mean flow.

    Temperature perturbation uses the strength squared, which is what makes
    the vortex an exact steady solution in the co-moving frame (the pressure
    gradient balances the centrifugal term); density and pressure follow the
    isentropic relations rho = T^(1/(gamma-1)), p = T^(gamma/(gamma-1)).
    """
    r2 = (x - xc) ** 2 + (y - yc) ** 2
    fac = VORTEX_EPS / (2.0 * np.pi) * np.exp(0.5 * (1.0 - r2))
    du = -(y - yc) * fac
    dv = (x - xc) * fac
    dT = -(GAMMA - 1.0) * VORTEX_EPS ** 2 / (8.0 * GAMMA * np.pi ** 2) * np.exp(1.0 - r2)
    T = 1.0 + dT
    return _stack(T ** (1.0 / (GAMMA - 1.0)), 1.0 + du, dv, T ** (GAMMA / (GAMMA - 1.0)))


def _vortex_exact(x, y, t):
    """Mean flow advects the vortex in +x; wrap into the periodic box."""
    xw = ((np.asarray(x, dtype=float) - t + 5.0) % 10.0) - 5.0
    return _vortex_init(xw, y)


# --------------------------------------------------------- 1D shock tubes
SOD_LEFT = (0.125, 0.0, 0.0, 0.1)
SOD_RIGHT = (1.0, 0.0, 0.0, 1.0)
LAX_LEFT = (0.445, 0.698, 0.0, 3.528)
LAX_RIGHT = (0.5, 0.0, 0.0, 0.571)


def _split_init(left, right, x0=0.5):
    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)

    def init(x, y):
        sel = (np.asarray(x, dtype=float) < x0)[..., None]
        return np.where(sel, left, right)

    return init


def _shu_osher_init(x, y):
    x = np.asarray(x, dtype=float)
    rho = np.where(x < 0.1, 3.857143, 1.0 + 0.2 * np.sin(50.0 * x))
    u = np.where(x < 0.1, 2.629369, 0.0)
    p = np.where(x < 0.1, 10.33333, 1.0)
    return _stack(rho, u, np.zeros_like(x), p)


def _riemann_exact_1d(left, right, x0=0.5):
    def exact(x, y, t):
        x = np.asarray(x, dtype=float)
        if t <= 0.0:
            return _split_init(left, right, x0)(x, y)
        return sample_riemann(left, right, (x - x0) / t)

    return exact


# --------------------------------------------------------- 2D Riemann
R2D_STATES = (
    (1.5, 0.0, 0.0, 1.5),          # x>0.8, y>0.8
    (0.5323, 1.206, 0.0, 0.3),     # x<0.8, y>0.8
    (0.138, 1.206, 1.206, 0.029),  # x<0.8, y<0.8
    (0.5323, 0.0, 1.206, 0.3),     # x>0.8, y<0.8
)


def _riemann2d_init(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    q = np.asarray(R2D_STATES)
    right = x >= 0.8
    top = y >= 0.8
    idx = np.where(right & top, 0, np.where(~right & top, 1, np.where(~right & ~top, 2, 3)))
    return q[idx]


# --------------------------------------------------------- double Mach
DMR_POST = (8.0, 7.145, -4.125, 116.5)
DMR_PRE = (1.4, 0.0, 0.0, 1.0)


def _double_mach_init(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    post = (y >= np.sqrt(3.0) * (x - 1.0 / 6.0))[..., None]
    return np.where(post, np.asarray(DMR_POST), np.asarray(DMR_PRE))


# --------------------------------------------------------- shock-vortex
def normal_shock_downstream(upstream, mach):
    """Stationary normal shock: downstream primitive state from upstream."""
    rho1, u1, v1, p1 = upstream
    m2 = mach * mach
    rho2 = rho1 * (GAMMA + 1.0) * m2 / ((GAMMA - 1.0) * m2 + 2.0)
    p2 = p1 * (1.0 + 2.0 * GAMMA / (GAMMA + 1.0) * (m2 - 1.0))
    u2 = u1 * rho1 / rho2
    return (rho2, u2, v1, p2)


def _shock_vortex_init_factory(mach, shock_x, center, eps, r_c=0.05, alpha=0.204):
    """Mach ``mach`` stationary shock at shock_x, isentropic vortex upstream.

    eps is the tangential speed of the vortex at its critical radius; the
    perturbation is superposed only on the region left of the shock and
    density/pressure are recomputed isentropically from the temperature.
    """
    up = (1.0, mach * math.sqrt(GAMMA), 0.0, 1.0)
    down = normal_shock_downstream(up, mach)
    xc, yc = center

    def init(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r = np.hypot(x - xc, y - yc)
        tau = r / r_c
        expo = np.exp(alpha * (1.0 - tau * tau))
        r_safe = np.where(r > 0, r, 1.0)
        sin_t = np.where(r > 0, (y - yc) / r_safe, 0.0)
        cos_t = np.where(r > 0, (x - xc) / r_safe, 0.0)
        du = eps * tau * expo * sin_t
        dv = -eps * tau * expo * cos_t
        dT = -(GAMMA - 1.0) * eps * eps / (4.0 * alpha * GAMMA) * expo * expo
        T1 = up[3] / up[0]
        T = T1 + dT
        rho = up[0] * (T / T1) ** (1.0 / (GAMMA - 1.0))
        p = up[3] * (T / T1) ** (GAMMA / (GAMMA - 1.0))
        upstream = _stack(rho, up[1] + du, dv, p)
        return np.where((x < shock_x)[..., None], upstream, np.asarray(down))

    return init, down


# ------------------------------------------------------------ case registry
def _strip_tags(lr_tag, tb_tag):
    return {"left": lr_tag, "right": lr_tag, "bottom": tb_tag, "top": tb_tag}


def init_case(name: str) -> CaseSpec:
    """Build the named benchmark case (see CASE_NAMES)."""
    if name == "vortex":
        return CaseSpec(
            name=name, domain=(-5.0, 5.0, -5.0, 5.0), t_end=0.2,
            initializer=_vortex_init, bc_map={},
            mesh_plan=dict(nx=40, ny=40, jitter=0.0,
                           side_tags=_strip_tags("periodic_x", "periodic_y"),
                           periodic={"periodic_x": (10.0, 0.0),
                                     "periodic_y": (0.0, 10.0)}),
            exact=_vortex_exact, slice_y=0.0)
    if name in ("sod", "lax", "shu_osher"):
        height = 0.2
        plan = dict(nx=89, ny=18, jitter=0.2,
                    side_tags=_strip_tags("dirichlet", "periodic_y"),
                    periodic={"periodic_y": (0.0, height)})
        if name == "sod":
            init, exact, t_end = (_split_init(SOD_LEFT, SOD_RIGHT),
                                  _riemann_exact_1d(SOD_LEFT, SOD_RIGHT), 0.2)
        elif name == "lax":
            init, exact, t_end = (_split_init(LAX_LEFT, LAX_RIGHT),
                                  _riemann_exact_1d(LAX_LEFT, LAX_RIGHT), 0.14)
        else:
            init, exact, t_end = _shu_osher_init, None, 0.18
        return CaseSpec(name=name, domain=(0.0, 1.0, 0.0, height), t_end=t_end,
                        initializer=init, bc_map={"dirichlet": "dirichlet"},
                        mesh_plan=plan, exact=exact, slice_y=0.1)
    if name == "riemann2d":
        return CaseSpec(
            name=name, domain=(0.0, 1.0, 0.0, 1.0), t_end=0.8,
            initializer=_riemann2d_init, bc_map={"dirichlet": "dirichlet"},
            mesh_plan=dict(nx=120, ny=120, jitter=0.2,
                           side_tags=_strip_tags("dirichlet", "dirichlet"),
                           periodic={}),
            slice_y=0.5)
    if name == "double_mach":
        def bottom_tag(xc, yc):
            return "inflow" if xc < 1.0 / 6.0 else "slipwall"

        return CaseSpec(
            name=name, domain=(0.0, 4.0, 0.0, 1.0), t_end=0.2,
            initializer=_double_mach_init,
            bc_map={"inflow": "dirichlet", "outflow": "outflow",
                    "slipwall": "slipwall", "dmr_top": "dmr_top"},
            mesh_plan=dict(nx=240, ny=60, jitter=0.2,
                           side_tags={"left": "inflow", "right": "outflow",
                                      "bottom": bottom_tag, "top": "dmr_top"},
                           periodic={}),
            dmr_states=(DMR_POST, DMR_PRE), slice_y=0.25)
    if name == "shock_vortex":
        init, _ = _shock_vortex_init_factory(1.1, 2.0, (0.25, 0.5), eps=0.3)
        return CaseSpec(
            name=name, domain=(0.0, 4.0, 0.0, 1.0), t_end=2.0,
            initializer=init,
            bc_map={"outflow": "outflow", "slipwall": "slipwall"},
            mesh_plan=dict(nx=90, ny=22, jitter=0.2,
                           side_tags={"left": "outflow", "right": "outflow",
                                      "bottom": "slipwall", "top": "slipwall"},
                           periodic={}),
            slice_y=0.5)
    if name == "strong_shock_vortex":
        # strength from M_v: tangential speed at the critical radius is
        # M_v * c0 with c0 = sqrt(gamma) of the unit upstream state
        init, _ = _shock_vortex_init_factory(1.5, 0.5, (0.25, 0.5),
                                             eps=0.9 * math.sqrt(GAMMA))
        return CaseSpec(
            name=name, domain=(0.0, 2.0, 0.0, 1.0), t_end=7.0,
            initializer=init,
            bc_map={"inflow": "dirichlet", "outflow": "outflow",
                    "slipwall": "slipwall"},
            mesh_plan=dict(nx=181, ny=90, jitter=0.2,
                           side_tags={"left": "inflow", "right": "outflow",
                                      "bottom": "slipwall", "top": "slipwall"},
                           periodic={}),
            slice_y=0.5)
    raise ValueError(f"unknown case {name!r}; choose from {CASE_NAMES}")


def case_mesh(case: CaseSpec, nx=None, ny=None, jitter=None, seed=2024):
    """Strip-generator mesh per the case's plan, with optional overrides."""
    plan = case.mesh_plan
    return make_strip_mesh(
        nx or plan["nx"], ny or plan["ny"], case.domain,
        jitter=plan["jitter"] if jitter is None else jitter,
        seed=seed, side_tags=plan["side_tags"], periodic=plan["periodic"])


# ------------------------------------------------------- exact Riemann solver
def _fk(p, rho_k, p_k, c_k):
    if p > p_k:   # shock branch
        a = 2.0 / ((GAMMA + 1.0) * rho_k)
        b = (GAMMA - 1.0) / (GAMMA + 1.0) * p_k
        return (p - p_k) * math.sqrt(a / (p + b))
    return 2.0 * c_k / (GAMMA - 1.0) * ((p / p_k) ** ((GAMMA - 1.0) / (2.0 * GAMMA)) - 1.0)


def _fk_deriv(p, rho_k, p_k, c_k):
    if p > p_k:
        a = 2.0 / ((GAMMA + 1.0) * rho_k)
        b = (GAMMA - 1.0) / (GAMMA + 1.0) * p_k
        root = math.sqrt(a / (p + b))
        return root * (1.0 - 0.5 * (p - p_k) / (p + b))
    return (p / p_k) ** (-(GAMMA + 1.0) / (2.0 * GAMMA)) / (rho_k * c_k)


def riemann_star(left, right, tol=1e-13, max_iter=80):
    """Star-region pressure and velocity of the 1D Riemann problem."""
    rho_l, u_l, p_l = left[0], left[1], left[-1]
    rho_r, u_r, p_r = right[0], right[1], right[-1]
    c_l = math.sqrt(GAMMA * p_l / rho_l)
    c_r = math.sqrt(GAMMA * p_r / rho_r)
    if 2.0 * (c_l + c_r) / (GAMMA - 1.0) <= u_r - u_l:
        raise RiemannVacuumError("initial states generate vacuum")
    du = u_r - u_l
    # two-rarefaction initial guess, positive by construction
    zp = (GAMMA - 1.0) / (2.0 * GAMMA)
    p = ((c_l + c_r - 0.5 * (GAMMA - 1.0) * du)
         / (c_l / p_l ** zp + c_r / p_r ** zp)) ** (1.0 / zp)
    for _ in range(max_iter):
        f = _fk(p, rho_l, p_l, c_l) + _fk(p, rho_r, p_r, c_r) + du
        df = _fk_deriv(p, rho_l, p_l, c_l) + _fk_deriv(p, rho_r, p_r, c_r)
        step = f / df
        p_new = max(p - step, 1e-14)
        if abs(p_new - p) <= tol * max(p, p_new):
            p = p_new
            break
        p = p_new
    u = 0.5 * (u_l + u_r) + 0.5 * (_fk(p, rho_r, p_r, c_r) - _fk(p, rho_l, p_l, c_l))
    return p, u


def exact_riemann(left, right, xi):
    """Exact solution of the 1D Riemann problem at ray x/t = xi.

    left/right are primitive 4-vectors (rho, u, v, p); the transverse velocity
    is a passive scalar jumping at the contact.  Returns (rho, u, v, p).
    """
    rho_l, u_l, p_l = left[0], left[1], left[-1]
    rho_r, u_r, p_r = right[0], right[1], right[-1]
    v_l = left[2] if len(left) == 4 else 0.0
    v_r = right[2] if len(right) == 4 else 0.0
    c_l = math.sqrt(GAMMA * p_l / rho_l)
    c_r = math.sqrt(GAMMA * p_r / rho_r)
    p_s, u_s = riemann_star(left, right)

    if xi <= u_s:   # left of the contact
        v = v_l
        if p_s > p_l:   # left shock
            sl = u_l - c_l * math.sqrt((GAMMA + 1.0) / (2.0 * GAMMA) * p_s / p_l
                                       + (GAMMA - 1.0) / (2.0 * GAMMA))
            if xi <= sl:
                return (rho_l, u_l, v, p_l)
            rho = rho_l * ((p_s / p_l + (GAMMA - 1.0) / (GAMMA + 1.0))
                           / ((GAMMA - 1.0) / (GAMMA + 1.0) * p_s / p_l + 1.0))
            return (rho, u_s, v, p_s)
        # left rarefaction
        sh = u_l - c_l
        cs = c_l * (p_s / p_l) ** ((GAMMA - 1.0) / (2.0 * GAMMA))
        st = u_s - cs
        if xi <= sh:
            return (rho_l, u_l, v, p_l)
        if xi >= st:
            return (rho_l * (p_s / p_l) ** (1.0 / GAMMA), u_s, v, p_s)
        c = (2.0 * c_l + (GAMMA - 1.0) * (u_l - xi)) / (GAMMA + 1.0)
        u = xi + c
        rho = rho_l * (c / c_l) ** (2.0 / (GAMMA - 1.0))
        return (rho, u, v, rho * c * c / GAMMA)

    v = v_r
    if p_s > p_r:   # right shock
        sr = u_r + c_r * math.sqrt((GAMMA + 1.0) / (2.0 * GAMMA) * p_s / p_r
                                   + (GAMMA - 1.0) / (2.0 * GAMMA))
        if xi >= sr:
            return (rho_r, u_r, v, p_r)
        rho = rho_r * ((p_s / p_r + (GAMMA - 1.0) / (GAMMA + 1.0))
                       / ((GAMMA - 1.0) / (GAMMA + 1.0) * p_s / p_r + 1.0))
        return (rho, u_s, v, p_s)
    # right rarefaction
    sh = u_r + c_r
    cs = c_r * (p_s / p_r) ** ((GAMMA - 1.0) / (2.0 * GAMMA))
    st = u_s + cs
    if xi >= sh:
        return (rho_r, u_r, v, p_r)
    if xi <= st:
        return (rho_r * (p_s / p_r) ** (1.0 / GAMMA), u_s, v, p_s)
    c = (2.0 * c_r - (GAMMA - 1.0) * (u_r - xi)) / (GAMMA + 1.0)
    u = xi - c
    rho = rho_r * (c / c_r) ** (2.0 / (GAMMA - 1.0))
    return (rho, u, v, rho * c * c / GAMMA)


def sample_riemann(left, right, xi):
    """Vectorized exact_riemann over an array of rays; returns (..., 4)."""
    xi = np.asarray(xi, dtype=float)
    flat = xi.reshape(-1)
    out = np.empty((flat.size, 4))
    for i, s in enumerate(flat):
        out[i] = exact_riemann(left, right, float(s))
    return out.reshape(xi.shape + (4,))


# ----------------------------------------------------------- error measures
@dataclass
class ErrorReport:
    l1: float
    l2: float
    linf: float
    n_points: int


def error_norms(numeric, exact) -> ErrorReport:
    """Pointwise density norms over all solution points (no volume weights)."""
    d = np.abs(np.asarray(numeric, dtype=float) - np.asarray(exact, dtype=float))
    n = d.size
    return ErrorReport(l1=float(d.sum() / n),
                       l2=float(np.sqrt((d * d).sum() / n)),
                       linf=float(d.max()), n_points=n)


def convergence_study(case_name, levels, scheme, order=4, cfl=0.2,
                      limiter=True, t_end=None, indicator=None, verbose=False):
    """Uniform-square-grid refinement study; returns one row dict per level.

    For the high-order scheme the CFL shrinks with resolution as
    (nx0/nx)^((order+1)/3 - 1) so the RK3 time error stays below the spatial
    error at every level.
    """
    case = init_case(case_name)
    if case.exact is None:
        raise ValueError(f"case {case_name!r} has no exact solution")
    rows = []
    prev = None
    for nx in levels:
        cfl_level = cfl
        if scheme == "cpr":
            cfl_level = cfl * (levels[0] / nx) ** max(0.0, (order + 1) / 3.0 - 1.0)
        cfg = SolverConfig(order=order, cfl=cfl_level,
                           t_end=case.t_end if t_end is None else t_end,
                           scheme=scheme, limiter=limiter)
        if indicator is not None:
            cfg.indicator = indicator
        mesh = case_mesh(case, nx=nx, ny=nx, jitter=0.0)
        solver = Solver(mesh, case, cfg)
        res = solver.run()
        pos = solver.point_positions()
        from .physics import cons_to_prim
        rho = cons_to_prim(res.state)[..., 0]
        rho_ex = case.exact(pos[..., 0], pos[..., 1], res.t)[..., 0]
        rep = error_norms(rho, rho_ex)
        row = dict(nx=nx, l1=rep.l1, l2=rep.l2, linf=rep.linf,
                   order_l1=float("nan"), order_l2=float("nan"),
                   order_linf=float("nan"), steps=res.steps)
        if prev is not None:
            ratio = math.log2(nx / prev["nx"])
            for k in ("l1", "l2", "linf"):
                row[f"order_{k}"] = math.log2(prev[k] / row[k]) / ratio
        rows.append(row)
        prev = row
        if verbose:
            print(f"  {nx:4d}x{nx:<4d} L1={row['l1']:.3e} order={row['order_l1']:.2f}")
    return rows
