"""Field, slice and summary writers.

Legacy ASCII VTK was picked over XML so goldens stay byte-exact; slices go to
CSV so plots need nothing from the solver.  Every writer uses fixed float
formats and a fixed traversal order, making repeat runs byte-identical.
"""

import numpy as np

from .basis import lagrange_eval_vector
from .mesh import map_from_coeffs
from .physics import cons_to_prim
from .subcell import flux_points

_F = "%.12e"


def _fp_interp_matrix(basis):
    """Rows evaluate the nodal interpolant at the subcell flux points."""
    fp = flux_points(basis.points.weights)
    return np.stack([lagrange_eval_vector(basis.points.nodes, x) for x in fp])


def write_vtk(path, mesh, basis, metrics, U, mask=None, energy=None, title="fields"):
    """Write one frame: each element tessellated into its subcell quads.

    Point data rho/u/v/p are the solution interpolated to the flux-point
    tensor grid ((N+2)^2 points per element, not shared across elements);
    cell data carry the troubled flag and the indicator energy per element.
    """
    ne = mesh.n_elements
    n = basis.points.nodes.size
    P = _fp_interp_matrix(basis)           # (n+1, n)
    fp = flux_points(basis.points.weights)
    W = cons_to_prim(U)
    npts_e = (n + 1) * (n + 1)
    ncell_e = n * n

    XI = np.broadcast_to(fp[None, :], (n + 1, n + 1))
    ETA = np.broadcast_to(fp[:, None], (n + 1, n + 1))

    lines = []
    lines.append("# vtk DataFile Version 3.0")
    lines.append(title)
    lines.append("ASCII")
    lines.append("DATASET UNSTRUCTURED_GRID")
    lines.append(f"POINTS {ne * npts_e} double")
    vals = np.empty((ne, n + 1, n + 1, 4))
    for e in range(ne):
        pos = map_from_coeffs(metrics.coeff[e], XI, ETA)
        for b in range(n + 1):
            for a in range(n + 1):
                lines.append(f"{_F % pos[b, a, 0]} {_F % pos[b, a, 1]} 0.0")
        vals[e] = np.einsum("bl,lkc,ak->bac", P, W[e], P)

    lines.append(f"CELLS {ne * ncell_e} {5 * ne * ncell_e}")
    for e in range(ne):
        base = e * npts_e
        for b in range(n):
            for a in range(n):
                i0 = base + b * (n + 1) + a
                lines.append(f"4 {i0} {i0 + 1} {i0 + n + 2} {i0 + n + 1}")
    lines.append(f"CELL_TYPES {ne * ncell_e}")
    lines.extend(["9"] * (ne * ncell_e))

    lines.append(f"POINT_DATA {ne * npts_e}")
    for ci, nameattr in enumerate(("density", "velocity_x", "velocity_y", "pressure")):
        lines.append(f"SCALARS {nameattr} double 1")
        lines.append("LOOKUP_TABLE default")
        for e in range(ne):
            for b in range(n + 1):
                for a in range(n + 1):
                    lines.append(_F % vals[e, b, a, ci])

    lines.append(f"CELL_DATA {ne * ncell_e}")
    lines.append("SCALARS troubled int 1")
    lines.append("LOOKUP_TABLE default")
    m = np.zeros(ne, dtype=int) if mask is None else np.asarray(mask, dtype=int)
    for e in range(ne):
        lines.extend([str(int(m[e]))] * ncell_e)
    lines.append("SCALARS energy_ratio double 1")
    lines.append("LOOKUP_TABLE default")
    en = np.zeros(ne) if energy is None else np.asarray(energy, dtype=float)
    for e in range(ne):
        lines.extend([_F % en[e]] * ncell_e)

    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def write_slice(path, mesh, basis, metrics, U, y0):
    """CSV of (x, rho, u, v, p) where the grid lines cross y = y0.

    In every element whose corners straddle y0, each xi-column of solution
    points is interpolated along eta to the crossing point.
    """
    nodes = basis.points.nodes
    n = nodes.size
    W = cons_to_prim(U)
    rows = []
    for e in range(mesh.n_elements):
        ys = mesh.corners(e)[:, 1]
        if y0 < ys.min() - 1e-12 or y0 > ys.max() + 1e-12:
            continue
        c = metrics.coeff[e]
        for k in range(n):
            xk = nodes[k]
            a = c[0, 1] + c[1, 1] * xk   # y = a + b*eta along this column
            b = c[2, 1] + c[3, 1] * xk
            if abs(b) < 1e-14:
                continue
            eta = (y0 - a) / b
            if not -1.0 <= eta <= 1.0:
                continue
            ell = lagrange_eval_vector(nodes, eta)
            prim = np.einsum("l,lc->c", ell, W[e, :, k, :])
            x = map_from_coeffs(c, np.asarray(xk), np.asarray(eta))[0]
            rows.append((x, *prim))
    rows.sort(key=lambda r: r[0])
    with open(path, "w", encoding="ascii") as fh:
        fh.write("x,rho,u,v,p\n")
        for r in rows:
            fh.write(",".join(_F % v for v in r) + "\n")


def report(result, case_name="", norms=None, scheme="", extra=()):
    """Human-readable run summary."""
    lines = [
        f"case:            {case_name}",
        f"scheme:          {scheme}",
        f"steps:           {result.steps}",
        f"final time:      {result.t:.6g}",
        f"wall time:       {result.wall_time:.2f} s",
        f"troubled final:  {100.0 * result.troubled_final:.2f} %",
        f"troubled avg:    {100.0 * result.troubled_avg:.2f} %",
        f"min density:     {result.rho_min:.6g}",
        f"min pressure:    {result.p_min:.6g}",
    ]
    if norms is not None:
        lines += [
            f"L1(rho):         {norms.l1:.6e}",
            f"L2(rho):         {norms.l2:.6e}",
            f"Linf(rho):       {norms.linf:.6e}",
        ]
    lines.extend(extra)
    return "\n".join(lines)
