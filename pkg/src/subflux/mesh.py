"""Unstructured straight-sided quadrilateral meshes.

File format (ASCII, line oriented)::

    QUADMESH 1
    NODES n
    x y                 (n lines)
    ELEMENTS m
    i0 i1 i2 i3         (m lines, 0-based node ids, counter-clockwise)
    BOUNDARIES b
    elem face tag       (b lines, face 0=south 1=east 2=north 3=west)
    PERIODIC tag dx dy  (optional, one line per periodic tag)

Conventions: reference corners are 0:(-1,-1) 1:(1,-1) 2:(1,1) 3:(-1,1);
local face f joins corners f and (f+1)%4.  Face flux points are numbered
along the counter-clockwise boundary traversal, so two conforming elements
always traverse a shared edge in opposite order and the stored ``reversed``
flag maps point k on one side to N-k on the other.
"""

from dataclasses import dataclass, field

import numpy as np

# face f spans corners (f, f+1 mod 4): south, east, north, west
FACE_CORNERS = ((0, 1), (1, 2), (2, 3), (3, 0))
FACE_NAMES = ("south", "east", "north", "west")

# reference corner coordinates, CCW
_REF_XI = np.array([-1.0, 1.0, 1.0, -1.0])
_REF_ETA = np.array([-1.0, -1.0, 1.0, 1.0])


class MeshError(ValueError):
    pass


class MeshFormatError(MeshError):
    """Malformed mesh file."""


class MeshTopologyError(MeshError):
    """Non-manifold faces, inverted elements, unmatched boundaries."""


@dataclass
class Mesh:
    nodes: np.ndarray                 # (n_nodes, 2)
    elem_nodes: np.ndarray            # (n_elem, 4) int, CCW
    face_tags: dict = field(default_factory=dict)      # (elem, face) -> tag
    periodic: dict = field(default_factory=dict)       # tag -> (dx, dy)
    # filled by build_connectivity:
    neighbor: np.ndarray | None = None        # (n_elem, 4) int, -1 on boundary
    neighbor_face: np.ndarray | None = None   # (n_elem, 4) int
    reversed_flag: np.ndarray | None = None   # (n_elem, 4) bool
    shift: np.ndarray | None = None           # (n_elem, 4, 2) partner->self translation

    @property
    def n_elements(self):
        return self.elem_nodes.shape[0]

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def boundary_faces(self):
        """List of (elem, face, tag) for faces without a neighbor."""
        out = []
        for (e, f), tag in sorted(self.face_tags.items()):
            if self.neighbor is None or self.neighbor[e, f] < 0:
                out.append((e, f, tag))
        return out

    def corners(self, e):
        return self.nodes[self.elem_nodes[e]]


def bilinear_coeffs(corners):
    """Coefficients (c0, c_xi, c_eta, c_xieta) of the bilinear map, per axis.

    Returns a (2, 4) array ``p`` with x = p[0] @ (1, xi, eta, xi*eta).
    """
    corners = np.asarray(corners, dtype=float)
    m = 0.25 * np.stack([
        np.ones(4),
        _REF_XI,
        _REF_ETA,
        _REF_XI * _REF_ETA,
    ])
    return m @ corners  # (4, 2) -> transpose below

def map_from_coeffs(coeff, xi, eta):
    basis_vec = np.stack([np.ones_like(xi * 1.0), xi, eta, xi * eta], axis=-1)
    return basis_vec @ coeff


def metric_terms(coeff, xi, eta):
    """(ax, ay, bx, by, jac) at reference point(s) (xi, eta).

    The transformed fluxes are F~ = ax*F + ay*G and G~ = bx*F + by*G with
    ax = y_eta, ay = -x_eta, bx = -y_xi, by = x_xi; jac = |J|.
    """
    x_xi = coeff[1, 0] + coeff[3, 0] * eta
    x_eta = coeff[2, 0] + coeff[3, 0] * xi
    y_xi = coeff[1, 1] + coeff[3, 1] * eta
    y_eta = coeff[2, 1] + coeff[3, 1] * xi
    jac = x_xi * y_eta - x_eta * y_xi
    return y_eta, -x_eta, -y_xi, x_xi, jac


def map_to_physical(mesh: Mesh, e: int, xi, eta):
    """Physical coordinates of reference point (xi, eta) in element e."""
    coeff = bilinear_coeffs(mesh.corners(e))
    return map_from_coeffs(coeff, np.asarray(xi, dtype=float), np.asarray(eta, dtype=float))


def _check_orientation(mesh: Mesh):
    """Counter-clockwise, non-inverted elements: corner Jacobians positive.

    |J| of a bilinear map is linear in (xi, eta), so positivity at the four
    corners implies positivity on the whole reference square.
    """
    for e in range(mesh.n_elements):
        ids = mesh.elem_nodes[e]
        if len(set(int(i) for i in ids)) != 4:
            raise MeshTopologyError(f"element {e} has repeated nodes")
        coeff = bilinear_coeffs(mesh.nodes[ids])
        for xi, eta in zip(_REF_XI, _REF_ETA):
            if metric_terms(coeff, xi, eta)[4] <= 0.0:
                raise MeshTopologyError(
                    f"element {e} is inverted or degenerate (|J| <= 0 at a corner)")


def build_connectivity(mesh: Mesh) -> Mesh:
    """Fill face adjacency, orientation flags and periodic pairings in place."""
    ne = mesh.n_elements
    nbr = np.full((ne, 4), -1, dtype=np.int64)
    nbr_face = np.full((ne, 4), -1, dtype=np.int64)
    rev = np.zeros((ne, 4), dtype=bool)
    shift = np.zeros((ne, 4, 2))

    by_edge = {}
    for e in range(ne):
        for f in range(4):
            a, b = (int(mesh.elem_nodes[e, c]) for c in FACE_CORNERS[f])
            by_edge.setdefault((min(a, b), max(a, b)), []).append((e, f, a, b))

    for key, faces in by_edge.items():
        if len(faces) > 2:
            raise MeshTopologyError(f"edge {key} shared by {len(faces)} elements (non-manifold)")
        if len(faces) == 2:
            (e0, f0, a0, b0), (e1, f1, a1, b1) = faces
            if (e0, f0) in mesh.face_tags or (e1, f1) in mesh.face_tags:
                raise MeshTopologyError(f"interior edge {key} carries a boundary tag")
            nbr[e0, f0], nbr[e1, f1] = e1, e0
            nbr_face[e0, f0], nbr_face[e1, f1] = f1, f0
            flag = (a0, b0) == (b1, a1)
            rev[e0, f0] = rev[e1, f1] = flag
        else:
            e, f, _, _ = faces[0]
            if (e, f) not in mesh.face_tags:
                raise MeshTopologyError(
                    f"face {f} ({FACE_NAMES[f]}) of element {e} has no neighbor and no tag")

    _pair_periodic(mesh, nbr, nbr_face, rev, shift)

    mesh.neighbor = nbr
    mesh.neighbor_face = nbr_face
    mesh.reversed_flag = rev
    mesh.shift = shift

    for e in range(ne):
        for f in range(4):
            if nbr[e, f] >= 0:
                e2, f2 = nbr[e, f], nbr_face[e, f]
                if nbr[e2, f2] != e or nbr_face[e2, f2] != f:
                    raise MeshTopologyError("face pairing is not an involution")
    return mesh


def _face_endpoints(mesh, e, f):
    a, b = (int(mesh.elem_nodes[e, c]) for c in FACE_CORNERS[f])
    return mesh.nodes[a], mesh.nodes[b]


def _pair_periodic(mesh, nbr, nbr_face, rev, shift):
    for tag, (dx, dy) in mesh.periodic.items():
        slots = sorted((e, f) for (e, f), t in mesh.face_tags.items() if t == tag)
        if not slots:
            continue
        tvec = np.array([dx, dy])
        tol = 1e-8 * max(1.0, np.abs(mesh.nodes).max())
        unpaired = list(slots)
        while unpaired:
            e, f = unpaired.pop(0)
            pa, pb = _face_endpoints(mesh, e, f)
            match = None
            for sgn in (1.0, -1.0):
                for other in unpaired:
                    qa, qb = _face_endpoints(mesh, *other)
                    if (np.linalg.norm(qa + sgn * tvec - pb) < tol
                            and np.linalg.norm(qb + sgn * tvec - pa) < tol):
                        match, flag, s = other, True, sgn
                        break
                    if (np.linalg.norm(qa + sgn * tvec - pa) < tol
                            and np.linalg.norm(qb + sgn * tvec - pb) < tol):
                        match, flag, s = other, False, sgn
                        break
                if match:
                    break
            if match is None:
                raise MeshTopologyError(
                    f"periodic face {(e, f)} with tag {tag!r} has no translated partner")
            unpaired.remove(match)
            e2, f2 = match
            nbr[e, f], nbr[e2, f2] = e2, e
            nbr_face[e, f], nbr_face[e2, f2] = f2, f
            rev[e, f] = rev[e2, f2] = flag
            shift[e, f] = s * tvec
            shift[e2, f2] = -s * tvec


def load_mesh(path) -> Mesh:
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.split("#", 1)[0].strip() for ln in fh]
    lines = [ln for ln in lines if ln]
    it = iter(enumerate(lines, start=1))

    def take(expect=None):
        try:
            lineno, ln = next(it)
        except StopIteration:
            raise MeshFormatError("unexpected end of file") from None
        if expect is not None and not ln.upper().startswith(expect):
            raise MeshFormatError(f"line {lineno}: expected {expect!r}, got {ln!r}")
        return ln

    if take() != "QUADMESH 1":
        raise MeshFormatError("missing 'QUADMESH 1' header")
    n_nodes = _count(take("NODES"))
    nodes = np.empty((n_nodes, 2))
    for i in range(n_nodes):
        parts = take().split()
        if len(parts) != 2:
            raise MeshFormatError(f"node {i}: expected 'x y'")
        nodes[i] = [float(parts[0]), float(parts[1])]
    if not np.all(np.isfinite(nodes)):
        raise MeshFormatError("non-finite node coordinate")

    n_elem = _count(take("ELEMENTS"))
    elems = np.empty((n_elem, 4), dtype=np.int64)
    for i in range(n_elem):
        parts = take().split()
        if len(parts) != 4:
            raise MeshFormatError(f"element {i}: expected 4 node ids")
        ids = [int(p) for p in parts]
        if any(j < 0 or j >= n_nodes for j in ids):
            raise MeshFormatError(f"element {i}: node index out of range")
        elems[i] = ids

    n_bnd = _count(take("BOUNDARIES"))
    tags = {}
    for i in range(n_bnd):
        parts = take().split()
        if len(parts) != 3:
            raise MeshFormatError(f"boundary {i}: expected 'elem face tag'")
        e, f = int(parts[0]), int(parts[1])
        if not (0 <= e < n_elem and 0 <= f < 4):
            raise MeshFormatError(f"boundary {i}: element/face out of range")
        tags[(e, f)] = parts[2]

    periodic = {}
    for _, ln in it:
        parts = ln.split()
        if parts[0].upper() != "PERIODIC" or len(parts) != 4:
            raise MeshFormatError(f"unexpected trailing line {ln!r}")
        periodic[parts[1]] = (float(parts[2]), float(parts[3]))

    used = np.zeros(n_nodes, dtype=bool)
    used[elems.ravel()] = True
    if not used.all():
        raise MeshTopologyError(f"orphan nodes: {np.nonzero(~used)[0][:5].tolist()} ...")

    mesh = Mesh(nodes=nodes, elem_nodes=elems, face_tags=tags, periodic=periodic)
    _check_orientation(mesh)
    return build_connectivity(mesh)


def _count(line):
    try:
        return int(line.split()[1])
    except (IndexError, ValueError):
        raise MeshFormatError(f"bad count line {line!r}") from None


def save_mesh(mesh: Mesh, path):
    with open(path, "w", encoding="ascii") as fh:
        fh.write("QUADMESH 1\n")
        fh.write(f"NODES {mesh.n_nodes}\n")
        for x, y in mesh.nodes:
            fh.write(f"{x!r} {y!r}\n")
        fh.write(f"ELEMENTS {mesh.n_elements}\n")
        for row in mesh.elem_nodes:
            fh.write(" ".join(str(int(i)) for i in row) + "\n")
        fh.write(f"BOUNDARIES {len(mesh.face_tags)}\n")
        for (e, f), tag in sorted(mesh.face_tags.items()):
            fh.write(f"{e} {f} {tag}\n")
        for tag, (dx, dy) in sorted(mesh.periodic.items()):
            fh.write(f"PERIODIC {tag} {dx!r} {dy!r}\n")


@dataclass
class MetricCache:
    """Per-element, per-solution-point metric terms (immutable after build)."""

    jac: np.ndarray    # (ne, n, n) |J| at points [eta_l, xi_k]
    ax: np.ndarray     # y_eta
    ay: np.ndarray     # -x_eta
    bx: np.ndarray     # -y_xi
    by: np.ndarray     # x_xi
    coeff: np.ndarray  # (ne, 4, 2) bilinear coefficients
    area: np.ndarray   # (ne,) quadrature area


def compute_metrics(mesh: Mesh, basis) -> MetricCache:
    nodes = basis.points.nodes
    w = basis.points.weights
    n = nodes.size
    ne = mesh.n_elements
    xi = np.broadcast_to(nodes[None, :], (n, n))
    eta = np.broadcast_to(nodes[:, None], (n, n))
    jac = np.empty((ne, n, n))
    ax = np.empty((ne, n, n))
    ay = np.empty((ne, n, n))
    bx = np.empty((ne, n, n))
    by = np.empty((ne, n, n))
    coeff = np.empty((ne, 4, 2))
    for e in range(ne):
        coeff[e] = bilinear_coeffs(mesh.corners(e))
        ax[e], ay[e], bx[e], by[e], jac[e] = metric_terms(coeff[e], xi, eta)
        if np.any(jac[e] <= 0.0):
            raise MeshTopologyError(f"element {e} degenerate: |J| <= 0 at a solution point")
    area = np.einsum("elk,l,k->e", jac, w, w)
    return MetricCache(jac=jac, ax=ax, ay=ay, bx=bx, by=by, coeff=coeff, area=area)


def make_strip_mesh(nx, ny, bounds, jitter=0.0, seed=2024, side_tags=None,
                    periodic=None) -> Mesh:
    """Structured nx-by-ny quad mesh with optional interior-node jitter.

    ``side_tags`` maps 'left'/'right'/'bottom'/'top' to a tag string or to a
    callable (xc, yc) -> tag evaluated at the face midpoint.  Boundary nodes
    are never jittered, so periodic pairings by translation stay conforming.
    """
    x0, x1, y0, y1 = bounds
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    if jitter:
        rng = np.random.default_rng(seed)
        hx, hy = (x1 - x0) / nx, (y1 - y0) / ny
        dx = rng.uniform(-0.5, 0.5, X.shape) * jitter * hx
        dy = rng.uniform(-0.5, 0.5, Y.shape) * jitter * hy
        X[1:-1, 1:-1] += dx[1:-1, 1:-1]
        Y[1:-1, 1:-1] += dy[1:-1, 1:-1]
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    def nid(i, j):
        return j * (nx + 1) + i

    elems = np.empty((nx * ny, 4), dtype=np.int64)
    for j in range(ny):
        for i in range(nx):
            elems[j * nx + i] = (nid(i, j), nid(i + 1, j), nid(i + 1, j + 1), nid(i, j + 1))

    side_tags = dict(side_tags or {})
    for k, default in (("left", "left"), ("right", "right"), ("bottom", "bottom"), ("top", "top")):
        side_tags.setdefault(k, default)

    def resolve(tag, e, f):
        if callable(tag):
            p0, p1 = _face_endpoints(mesh, e, f)
            return tag(0.5 * (p0[0] + p1[0]), 0.5 * (p0[1] + p1[1]))
        return tag

    mesh = Mesh(nodes=nodes, elem_nodes=elems, periodic=dict(periodic or {}))
    tags = {}
    for j in range(ny):
        tags[(j * nx, 3)] = ("left", j * nx, 3)
        tags[(j * nx + nx - 1, 1)] = ("right", j * nx + nx - 1, 1)
    for i in range(nx):
        tags[(i, 0)] = ("bottom", i, 0)
        tags[((ny - 1) * nx + i, 2)] = ("top", (ny - 1) * nx + i, 2)
    mesh.face_tags = {
        (e, f): resolve(side_tags[side], e, f) for (e, f), (side, _, _) in tags.items()
    }
    _check_orientation(mesh)
    return build_connectivity(mesh)
