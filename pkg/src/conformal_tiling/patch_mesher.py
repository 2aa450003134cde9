"""Meshing the symmetry patch Q(c) = S(c) ∩ {x >= y >= z >= 0}.

Geometry of the patch
---------------------
Along a ray t*w from the origin (|w| = 1) the quartic becomes a quadratic
in t^2,

    8 q(w) t^4 - 8 t^2 + 3 - c = 0,     q(w) = w_x^4 + w_y^4 + w_z^4,

so t^2 = (1 +- sqrt(1 - q/kappa)) / (2q) with kappa = 2/(3 - c). Inside the
wedge, q rises monotonically from the x=y wall toward the face axis, where
q = 1 > kappa for every c < 1. The patch is therefore two radial sheets (the
inner "-" root and the outer "+" root) over the region {q <= kappa} of the
spherical wedge, glued along the fold q = kappa where the ray is tangent.

The chart used here is (s, v) in [0, 1] x [-1, 1]:

* s picks the direction P(s) on the wedge's x=y side, sliding from the edge
  axis (s=0, the z=0 wall) to the vertex axis (s=1, the y=z wall);
* the fibre for s runs from P(s) toward the face axis; along it the signed
  root w = v * sqrt(1 - q(P)/kappa) goes from the inner sheet on the x=y
  wall (v=-1) through the fold (v=0) to the outer sheet on the x=y wall
  (v=+1).

Because the three walls are planes through the origin, points on the chart
boundary lie exactly on their walls, and every chart point lies on S(c) to
rounding error without any projection step.

Mesh construction
-----------------
A uniform grid in (s, v) is badly anisotropic. Instead, a fine background
grid is mapped to a rectangle by two harmonic functions: U (0 on LEFT, 1 on
RIGHT) and W (0 on BOTTOM, 1 on TOP). The map is close to conformal, so a
uniform square lattice in (U, M*W), with M the quad's conformal modulus,
pulls back to nearly square cells on the surface. Near the two 60 degree
corners the lattice is graded by conforming bisection so those cells do not
blow up.
"""

from dataclasses import dataclass, field
import logging

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import LinearNDInterpolator

from .errors import DomainError, MeshTopologyError
from .implicit_surfaces import axis_points, eval_field, eval_gradient
from .mesh import DEGENERATE_AREA, QualityReport, TriangleMesh

log = logging.getLogger(__name__)

CORNER_LABELS = ("V1", "V2", "E1", "E2")
SIDE_LABELS = ("TOP", "BOTTOM", "LEFT", "RIGHT")
# corner -> target angle, used by the flattening
CORNER_ANGLES = {"V1": np.pi / 3, "V2": np.pi / 3, "E1": np.pi / 2, "E2": np.pi / 2}
PLANE_TOL = 1e-9
DEFAULT_EDGE_LENGTH = 0.02
MAX_REFINE_ROUNDS = 24
GRADING_RADIUS = 0.25

_FACE_DIR = np.array([1.0, 0.0, 0.0])
_EDGE_DIR = np.array([1.0, 1.0, 0.0]) / np.sqrt(2.0)
_VERTEX_DIR = np.array([1.0, 1.0, 1.0]) / np.sqrt(3.0)


def wall_distances(points):
    """Distances |x - y|, |y - z|, |z| to the three wedge walls (unscaled)."""
    p = np.asarray(points, dtype=float)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    return np.abs(x - y), np.abs(y - z), np.abs(z)


class RadialChart:
    """The (s, v) chart of Q(c) described in the module docstring."""

    def __init__(self, c):
        if not -1.0 < c < 1.0:
            raise DomainError(f"contour value c={c} outside the smooth range (-1, 1)")
        self.c = float(c)
        self.kappa = 2.0 / (3.0 - c)
        self._omega = np.arccos(_EDGE_DIR @ _VERTEX_DIR)

    def side_direction(self, s):
        s = np.asarray(s, dtype=float)[..., None]
        om = self._omega
        return (np.sin((1.0 - s) * om) * _EDGE_DIR + np.sin(s * om) * _VERTEX_DIR) / np.sin(om)

    @staticmethod
    def _fibre(P, lam):
        d = (1.0 - lam)[..., None] * P + lam[..., None] * _FACE_DIR
        return d / np.linalg.norm(d, axis=-1, keepdims=True)

    @staticmethod
    def _q(w):
        return np.sum(w**4, axis=-1)

    def points(self, s, v, iterations=54):
        s = np.asarray(s, dtype=float)
        v = np.asarray(v, dtype=float)
        s, v = np.broadcast_arrays(s, v)
        P = self.side_direction(s)
        wP = np.sqrt(1.0 - self._q(P) / self.kappa)
        w = v * wP
        q_target = self.kappa * (1.0 - w * w)
        lo = np.zeros(s.shape)
        hi = np.ones(s.shape)
        # q increases monotonically along each fibre
        for _ in range(iterations):
            mid = 0.5 * (lo + hi)
            below = self._q(self._fibre(P, mid)) < q_target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        lam = np.where(np.abs(v) == 1.0, 0.0, 0.5 * (lo + hi))
        om = self._fibre(P, lam)
        t = np.sqrt((1.0 + w) / (2.0 * self._q(om)))
        return om * t[..., None]


@dataclass(frozen=True, eq=False)
class PatchMesh:
    """Triangulated patch with labeled corners.

    V1/E1 are the inner corners (closer to the origin) and bound the LEFT
    side; V2/E2 bound the RIGHT side.
    """

    mesh: TriangleMesh
    corners: dict
    c: float
    info: dict = field(default_factory=dict)

    def corner_array(self):
        return np.array([self.corners[k] for k in CORNER_LABELS])

    def validate(self, tol=PLANE_TOL):
        m = self.mesh
        m.validate()
        if m.euler_characteristic() != 1:
            raise MeshTopologyError(f"patch is not a disk (chi={m.euler_characteristic()})")
        loops = m.boundary_loops()
        if len(loops) != 1:
            raise MeshTopologyError(f"patch has {len(loops)} boundary loops")
        res = np.abs(eval_field(m.vertices) - self.c)
        if res.max() >= tol:
            raise MeshTopologyError(f"vertex off the contour by {res.max():.3e}")
        side_chains(self, tol=tol)
        v = m.vertices
        for label in CORNER_LABELS:
            p = v[self.corners[label]]
            dxy, dyz, dz = wall_distances(p)
            on_axis = (dxy < tol and dyz < tol) if label[0] == "V" else (dxy < tol and dz < tol)
            if not on_axis:
                raise MeshTopologyError(f"corner {label} is off its axis: {p.tolist()}")
        return self


def _cotan_laplacian(V, F):
    n = len(V)
    rows, cols, vals = [], [], []
    for k in range(3):
        i, j, o = F[:, (k + 1) % 3], F[:, (k + 2) % 3], F[:, k]
        a = V[i] - V[o]
        b = V[j] - V[o]
        w = 0.5 * np.sum(a * b, axis=1) / np.linalg.norm(np.cross(a, b), axis=1)
        rows += [i, j, i, j]
        cols += [j, i, i, j]
        vals += [-w, -w, w, w]
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )


def _dirichlet_solve(L, fixed, values):
    n = L.shape[0]
    free = np.setdiff1d(np.arange(n), fixed)
    x = np.zeros(n)
    x[fixed] = values
    A = L[free][:, free].tocsc()
    x[free] = spla.spsolve(A, -(L[free][:, fixed] @ values))
    return x


def _grid_faces(idx, verts):
    """Split each grid quad along its shorter 3D diagonal.

    Each triangle is listed starting from its right-angle corner, so the
    edge opposite the first vertex is the diagonal.
    """
    a = idx[:-1, :-1].ravel()
    b = idx[1:, :-1].ravel()
    c = idx[1:, 1:].ravel()
    d = idx[:-1, 1:].ravel()
    ac = np.linalg.norm(verts[a] - verts[c], axis=1)
    bd = np.linalg.norm(verts[b] - verts[d], axis=1)
    use_ac = ac <= bd
    f1 = np.where(use_ac[:, None], np.stack([b, c, a], 1), np.stack([a, b, d], 1))
    f2 = np.where(use_ac[:, None], np.stack([d, a, c], 1), np.stack([c, d, b], 1))
    return np.concatenate([f1, f2])


class _Bisection:
    """Conforming newest-vertex bisection of a triangle list.

    Triangle (v0, v1, v2) is split at the midpoint m of its refinement edge
    (v1, v2) into (m, v0, v1) and (m, v2, v0). A neighbour whose refinement
    edge differs is split first, which keeps the mesh conforming; starting
    from right triangles paired across their hypotenuses, every descendant is
    similar to its ancestor.
    """

    def __init__(self, points, faces):
        self.points = [tuple(p) for p in points]
        self.tris = [tuple(int(x) for x in f) for f in faces]
        self.alive = [True] * len(self.tris)
        self.half = {}
        for t, f in enumerate(self.tris):
            self._link(t, f)

    def _link(self, t, f):
        for k in range(3):
            self.half[(f[k], f[(k + 1) % 3])] = t

    def _unlink(self, f):
        for k in range(3):
            del self.half[(f[k], f[(k + 1) % 3])]

    def _split(self, t, m):
        v0, v1, v2 = self.tris[t]
        self._unlink(self.tris[t])
        self.alive[t] = False
        for child in ((m, v0, v1), (m, v2, v0)):
            self.tris.append(child)
            self.alive.append(True)
            self._link(len(self.tris) - 1, child)

    def refine(self, t):
        _, v1, v2 = self.tris[t]
        n = self.half.get((v2, v1))
        while n is not None and set(self.tris[n][1:]) != {v1, v2}:
            self.refine(n)
            n = self.half.get((v2, v1))
        p, q = self.points[v1], self.points[v2]
        self.points.append((0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])))
        m = len(self.points) - 1
        self._split(t, m)
        if n is not None:
            self._split(n, m)

    def faces(self):
        return np.array([f for f, a in zip(self.tris, self.alive) if a], dtype=np.int64)


def _background(chart, n_s, n_v, n_fine):
    """Fine chart grid, arclength-uniform along each fibre."""
    s = np.linspace(0.0, 1.0, n_s + 1)
    vf = np.linspace(-1.0, 1.0, n_fine + 1)
    X = chart.points(s[:, None], vf[None, :])
    seg = np.linalg.norm(np.diff(X, axis=1), axis=-1)
    cum = np.concatenate([np.zeros((n_s + 1, 1)), np.cumsum(seg, axis=1)], axis=1)
    cum /= cum[:, -1:]
    frac = np.linspace(0.0, 1.0, n_v + 1)
    V = np.array([np.interp(frac, cum[k], vf) for k in range(n_s + 1)])
    V[:, 0], V[:, -1] = -1.0, 1.0
    S = np.repeat(s[:, None], n_v + 1, axis=1)
    return S, V, chart.points(S, V)


def mesh_patch(c, target_edge_length=DEFAULT_EDGE_LENGTH, background=None):
    """Triangulate Q(c) with edges of roughly ``target_edge_length``.

    Raises :class:`DomainError` for c outside (-1, 1) and
    :class:`MeshTopologyError` if the pulled-back lattice folds over, which
    happens only when the lattice is too coarse for the geometry.
    """
    if target_edge_length <= 0:
        raise DomainError("target_edge_length must be positive")
    chart = RadialChart(c)
    h = float(target_edge_length)
    n_s = background or max(96, int(np.ceil(2.0 / h)))
    n_v = 2 * n_s
    S, Vp, X = _background(chart, n_s, n_v, 4 * n_v)

    idx = np.arange((n_s + 1) * (n_v + 1)).reshape(n_s + 1, n_v + 1)
    P = X.reshape(-1, 3)
    F = _grid_faces(idx, P)
    L = _cotan_laplacian(P, F)
    left, right, bottom, top = idx[:, 0], idx[:, -1], idx[0, :], idx[-1, :]
    U = _dirichlet_solve(L, np.concatenate([left, right]), np.r_[np.zeros(n_s + 1), np.ones(n_s + 1)])
    W = _dirichlet_solve(L, np.concatenate([bottom, top]), np.r_[np.zeros(n_v + 1), np.ones(n_v + 1)])
    modulus = float(U @ (L @ U))
    area = float(TriangleMesh(P, F).face_areas().sum())

    # lattice spacing chosen so the cell diagonals (the longest edges) are ~h
    delta = h / np.sqrt(2.0) * np.sqrt(modulus / area)
    nu = max(2, int(round(1.0 / delta)))
    nw = max(2, int(round(modulus / delta)))
    base_leg = max(1.0 / nu, modulus / nw)
    interp = LinearNDInterpolator(np.c_[U, W], np.c_[S.ravel(), Vp.ravel()])
    e_in, e_out = axis_points(c, "edge")
    v_in, v_out = axis_points(c, "vertex")

    def to_surface(uw):
        sv = interp(uw)
        if not np.all(np.isfinite(sv)):
            raise MeshTopologyError("lattice point fell outside the parameter domain")
        uu, ww = uw[:, 0], uw[:, 1]
        s = np.clip(sv[:, 0], 0.0, 1.0)
        v = np.clip(sv[:, 1], -1.0, 1.0)
        s[ww == 0.0], s[ww == 1.0] = 0.0, 1.0
        v[uu == 0.0], v[uu == 1.0] = -1.0, 1.0
        pts = chart.points(s, v)
        # exact wall membership
        pts[ww == 0.0, 2] = 0.0
        top = ww == 1.0
        pts[top, 1] = pts[top, 2] = 0.5 * (pts[top, 1] + pts[top, 2])
        side = (uu == 0.0) | (uu == 1.0)
        pts[side, 0] = pts[side, 1] = 0.5 * (pts[side, 0] + pts[side, 1])
        for (cu, cw), p in (((0, 0), e_in), ((1, 0), e_out), ((0, 1), v_in), ((1, 1), v_out)):
            pts[(uu == cu) & (ww == cw)] = p
        return pts

    Ug, Wg = np.meshgrid(np.linspace(0, 1, nu + 1), np.linspace(0, 1, nw + 1), indexing="ij")
    gidx = np.arange((nu + 1) * (nw + 1)).reshape(nu + 1, nw + 1)
    verts = to_surface(np.c_[Ug.ravel(), Wg.ravel()])
    faces = _grid_faces(gidx, verts)

    # The lattice map opens the 60 degree corners V1/V2 to 90 degrees, so
    # near them surface distance grows like (lattice distance)^(2/3). Grade
    # the lattice there by bisection: a triangle at lattice distance rho from
    # a V corner is split while its legs exceed base_leg * (rho / GRADING_RADIUS)^(1/3).
    bis = _Bisection(np.c_[Ug.ravel(), Wg.ravel()], faces)
    v_corners = np.array([[0.0, modulus], [1.0, modulus]])
    for _ in range(MAX_REFINE_ROUNDS):
        z = np.array(bis.points) * [1.0, modulus]
        tri = z[faces]
        leg = np.linalg.norm(tri[:, 1] - tri[:, 0], axis=1)
        centre = tri.mean(axis=1)
        rho = np.min(np.linalg.norm(centre[:, None, :] - v_corners[None], axis=2), axis=1)
        marked = np.flatnonzero(leg > base_leg * np.cbrt(np.minimum(rho / GRADING_RADIUS, 1.0)) * 1.001)
        if len(marked) == 0:
            break
        live = np.flatnonzero(bis.alive)
        for t in live[marked]:
            if bis.alive[t]:
                bis.refine(t)
        faces = bis.faces()
    uw = np.array(bis.points)
    verts = np.concatenate([verts, to_surface(uw[len(verts):])])
    faces = bis.faces()

    # orient faces so normals follow grad F (away from the solid {F < c})
    tri = verts[faces]
    normals = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    align = np.einsum("ij,ij->i", normals, eval_gradient(tri.mean(axis=1)))
    if np.sum(align < 0) > len(align) // 2:
        faces = faces[:, ::-1].copy()
        align = -align
    if np.any(align <= 0):
        raise MeshTopologyError(
            f"{int(np.sum(align <= 0))} faces fold over; mesh too coarse near c={c}"
        )
    mesh = TriangleMesh(verts, faces)
    corners = {"V1": int(gidx[0, -1]), "V2": int(gidx[-1, -1]), "E1": int(gidx[0, 0]), "E2": int(gidx[-1, 0])}
    patch = PatchMesh(
        mesh, corners, float(c),
        info={"target_edge_length": h, "grid": [nu, nw], "euclidean_modulus": modulus, "area": area,
              "refined_vertices": len(uw) - (nu + 1) * (nw + 1)},
    )
    patch.validate()
    log.debug("meshed Q(%.6f): %d vertices, %d faces", c, mesh.n_vertices, mesh.n_faces)
    return patch


def _plane_membership(p, tol):
    dxy, dyz, dz = wall_distances(p)
    return [name for name, d in (("xy", dxy), ("yz", dyz), ("z0", dz)) if d < tol]


_SIDE_PLANE = {"TOP": "yz", "BOTTOM": "z0", "LEFT": "xy", "RIGHT": "xy"}
_SIDE_ENDS = {"TOP": ("V1", "V2"), "BOTTOM": ("E1", "E2"), "LEFT": ("V1", "E1"), "RIGHT": ("V2", "E2")}


def side_chains(patch, tol=PLANE_TOL):
    """Split the boundary loop at the corners into labeled vertex chains.

    Chains run TOP V1->V2, BOTTOM E1->E2, LEFT V1->E1, RIGHT V2->E2 and
    include both end corners.
    """
    corners = patch.corners
    if set(corners) != set(CORNER_LABELS) or len(set(corners.values())) != 4:
        raise MeshTopologyError(f"patch needs 4 distinct corners {CORNER_LABELS}, got {sorted(corners)}")
    loops = patch.mesh.boundary_loops()
    if len(loops) != 1:
        raise MeshTopologyError(f"expected one boundary loop, found {len(loops)}")
    loop = loops[0]
    pos = {int(vtx): i for i, vtx in enumerate(loop)}
    by_vertex = {}
    for label, vtx in corners.items():
        if vtx not in pos:
            raise MeshTopologyError(f"corner {label} (vertex {vtx}) is not on the boundary")
        by_vertex[vtx] = label
    loop = np.roll(loop, -pos[corners["V1"]])
    cuts = sorted(i for i, vtx in enumerate(loop) if int(vtx) in by_vertex) + [len(loop)]
    verts = patch.mesh.vertices
    closed = np.r_[loop, loop[:1]]
    chains = {}
    for a, b in zip(cuts[:-1], cuts[1:]):
        chain = closed[a : b + 1]
        ends = {by_vertex[int(chain[0])], by_vertex[int(chain[-1])]}
        label = next((k for k, e in _SIDE_ENDS.items() if set(e) == ends), None)
        if label is None:
            raise MeshTopologyError(f"boundary chain joins corners {sorted(ends)}")
        for vtx in chain[1:-1]:
            planes = _plane_membership(verts[vtx], tol)
            if len(planes) != 1:
                raise MeshTopologyError(
                    f"vertex {int(vtx)} lies on planes {planes or 'none'}; cannot classify"
                )
            if planes[0] != _SIDE_PLANE[label]:
                raise MeshTopologyError(
                    f"vertex {int(vtx)} on plane {planes[0]} inside side {label}"
                )
        if by_vertex[int(chain[0])] != _SIDE_ENDS[label][0]:
            chain = chain[::-1]
        chains[label] = np.asarray(chain, dtype=np.int64)
    if set(chains) != set(SIDE_LABELS):
        raise MeshTopologyError(f"sides found: {sorted(chains)}")
    return chains


def chain_length(points, chain):
    p = points[chain]
    return float(np.linalg.norm(np.diff(p, axis=0), axis=1).sum())


def mesh_quality(mesh, c=None, bins=10):
    """Angle, edge-length and contour-residual statistics for a mesh or patch."""
    if isinstance(mesh, PatchMesh):
        c = mesh.c if c is None else c
        mesh = mesh.mesh
    areas = mesh.face_areas()
    degenerate = tuple(int(i) for i in np.flatnonzero(areas <= DEGENERATE_AREA))
    good = areas > DEGENERATE_AREA
    ang = np.degrees(mesh.corner_angles()[good]) if good.any() else np.array([np.nan])
    el = mesh.edge_lengths
    lo, hi = float(el.min()), float(el.max())
    if hi - lo <= 1e-9 * hi:
        # (near) constant lengths: widen the range around them
        lo, hi = lo - 0.5 * hi, hi + 0.5 * hi
    counts, edges = np.histogram(el, bins=bins, range=(lo, hi))
    residual = float(np.max(np.abs(eval_field(mesh.vertices) - c))) if c is not None else float("nan")
    return QualityReport(
        min_angle=float(np.min(ang)),
        median_angle=float(np.median(ang)),
        max_angle=float(np.max(ang)),
        median_edge=float(np.median(el)),
        min_edge=float(el.min()),
        max_edge=float(el.max()),
        edge_histogram=(tuple(int(x) for x in counts), tuple(float(x) for x in edges)),
        degenerate_faces=degenerate,
        max_residual=residual,
        n_vertices=mesh.n_vertices,
        n_faces=mesh.n_faces,
    )
