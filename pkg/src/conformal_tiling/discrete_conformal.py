"""Discrete conformal flattening of a patch into the hyperbolic plane.

A euclidean mesh with edge lengths l and a hyperbolic mesh with lengths L are
discretely conformally equivalent when

    sinh(L_ij / 2) = e^{(u_i + u_j)/2} l_ij / 2

for per-vertex log scale factors u. Prescribing the angle sum at every vertex
(2*pi inside, pi on the straight sides, the corner angles at the corners)
determines u uniquely: the angle-sum map is the negative gradient of a
strictly convex function of u, so damped Newton converges from u = 0.
"""

from dataclasses import dataclass, field
import logging

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import hyperbolic as hyp
from .errors import ConvergenceError, DomainError, TriangleInequalityError
from .patch_mesher import CORNER_ANGLES, PatchMesh, side_chains
from .svg import FILL, SvgCanvas

log = logging.getLogger(__name__)

U_CAP = 40.0
WHITE, BLACK = 0, 1
LAYOUT_TOL = 1e-5

# (2,4,6) quad reference values
LEFT_TARGET = float(np.arccosh(np.sqrt(2.0)))
TOP_TARGET = 2.0 * LEFT_TARGET
BOTTOM_TARGET = 2.0 * float(np.arccosh(np.sqrt(1.5)))


def target_angles(patch):
    """Per-vertex target angle sums for the quad with 60/60/90/90 corners."""
    mesh = patch.mesh
    theta = np.full(mesh.n_vertices, 2.0 * np.pi)
    theta[mesh.boundary_vertices()] = np.pi
    for label, vtx in patch.corners.items():
        theta[vtx] = CORNER_ANGLES[label]
    return theta


def _as_mesh(obj):
    return obj.mesh if isinstance(obj, PatchMesh) else obj


def conformal_lengths(mesh, u, scale=1.0):
    """Hyperbolic edge lengths 2 asinh(scale * l/2 * exp((u_i + u_j)/2))."""
    mesh = _as_mesh(mesh)
    u = np.asarray(u, dtype=float)
    if np.any(~np.isfinite(u)) or np.max(np.abs(u)) > U_CAP:
        raise ConvergenceError(f"conformal factor left [-{U_CAP}, {U_CAP}]; iteration diverged")
    e = mesh.edges
    return 2.0 * np.arcsinh(0.5 * scale * mesh.edge_lengths * np.exp(0.5 * (u[e[:, 0]] + u[e[:, 1]])))


def hyp_triangle_angles(a, b, c):
    """Angles (alpha, beta, gamma) opposite the hyperbolic sides a, b, c."""
    if not (a < b + c and b < a + c and c < a + b) or min(a, b, c) <= 0:
        raise TriangleInequalityError(
            f"side lengths {(a, b, c)} violate the triangle inequality", lengths=(a, b, c)
        )
    return tuple(float(x) for x in hyp.triangle_angles(a, b, c))


def _valid(face_lengths):
    a = face_lengths
    return np.all(a.sum(axis=1) - 2.0 * a.max(axis=1) > 0.0)


def face_angles(mesh, lengths):
    """Corner angles (m, 3) from per-edge hyperbolic lengths."""
    mesh = _as_mesh(mesh)
    a = lengths[mesh.face_edges]
    if not _valid(a):
        bad = int(np.argmin(a.sum(axis=1) - 2.0 * a.max(axis=1)))
        raise TriangleInequalityError(f"face {bad} violates the triangle inequality", lengths=tuple(a[bad]))
    return np.stack(hyp.triangle_angles(a[:, 0], a[:, 1], a[:, 2]), axis=1)


def angle_sums(mesh, u, scale=1.0):
    mesh = _as_mesh(mesh)
    ang = face_angles(mesh, conformal_lengths(mesh, u, scale))
    return np.bincount(mesh.faces.ravel(), ang.ravel(), minlength=mesh.n_vertices)


def _local_jacobian(a, ang):
    """d(alpha_i)/d(u_m) per face, shape (m, 3, 3), indices (i, m)."""
    t = np.tanh(0.5 * a)
    sh = np.sinh(a)
    out = np.empty(a.shape + (3,))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        d_ii = sh[:, i] / (sh[:, j] * sh[:, k] * np.sin(ang[:, i]))
        d_ij = -d_ii * np.cos(ang[:, k])
        d_ik = -d_ii * np.cos(ang[:, j])
        out[:, i, i] = d_ij * t[:, j] + d_ik * t[:, k]
        out[:, i, j] = d_ii * t[:, i] + d_ik * t[:, k]
        out[:, i, k] = d_ii * t[:, i] + d_ij * t[:, j]
    return out


def _local_jacobian_fd(mesh, u, scale, step=1e-6):
    f = mesh.faces
    fe = mesh.face_edges
    l = mesh.edge_lengths[fe]
    uf = u[f]
    out = np.empty(f.shape + (3,))

    def angles_at(uu):
        # edge opposite corner k joins corners k+1, k+2
        s = np.stack([uu[:, 1] + uu[:, 2], uu[:, 2] + uu[:, 0], uu[:, 0] + uu[:, 1]], axis=1)
        a = 2.0 * np.arcsinh(0.5 * scale * l * np.exp(0.5 * s))
        return np.stack(hyp.triangle_angles(a[:, 0], a[:, 1], a[:, 2]), axis=1)

    for m in range(3):
        du = np.zeros(3)
        du[m] = step
        out[:, :, m] = (angles_at(uf + du) - angles_at(uf - du)) / (2.0 * step)
    return out


def angle_jacobian(mesh, u, scale=1.0, method="analytic"):
    """Sparse Jacobian of the vertex angle sums with respect to u.

    ``method="fd"`` builds the per-face blocks by central differences.
    """
    mesh = _as_mesh(mesh)
    f = mesh.faces
    if method == "analytic":
        lengths = conformal_lengths(mesh, u, scale)
        local = _local_jacobian(lengths[mesh.face_edges], face_angles(mesh, lengths))
    elif method == "fd":
        local = _local_jacobian_fd(mesh, np.asarray(u, dtype=float), scale)
    else:
        raise ValueError(f"unknown Jacobian method {method!r}")
    rows = np.repeat(f, 3, axis=1).ravel()
    cols = np.tile(f, (1, 3)).ravel()
    n = mesh.n_vertices
    return sp.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))


def conformal_energy(mesh, u, targets, scale=1.0, nodes=20):
    """Convex energy with gradient (targets - angle sums).

    Evaluated as the line integral of its gradient from u = 0, using
    Gauss-Legendre quadrature; the integrand is smooth along the segment as
    long as every intermediate metric is valid.
    """
    mesh = _as_mesh(mesh)
    u = np.asarray(u, dtype=float)
    x, w = np.polynomial.legendre.leggauss(nodes)
    t = 0.5 * (x + 1.0)
    total = 0.0
    for ti, wi in zip(t, w):
        g = targets - angle_sums(mesh, ti * u, scale)
        total += 0.5 * wi * float(g @ u)
    return total


@dataclass(frozen=True, eq=False)
class FlattenedPatch:
    patch: PatchMesh
    u: np.ndarray
    lengths: np.ndarray
    targets: np.ndarray
    residual: float
    iterations: int
    history: tuple
    scale: float = 1.0
    layout: np.ndarray = None

    @property
    def mesh(self):
        return self.patch.mesh

    def angles(self):
        return face_angles(self.mesh, self.lengths)

    def face_areas(self):
        """Hyperbolic face areas pi - (sum of angles)."""
        return np.pi - self.angles().sum(axis=1)

    def total_area(self):
        return float(self.face_areas().sum())

    def report(self):
        sides = side_lengths(self.patch, self)
        return {
            "c": self.patch.c,
            "n_vertices": self.mesh.n_vertices,
            "n_faces": self.mesh.n_faces,
            "iterations": self.iterations,
            "residual": self.residual,
            "residual_history": list(self.history),
            "area": self.total_area(),
            "side_lengths": sides.to_dict(),
            "mismatch": mismatch(sides),
        }


def flatten(patch, targets=None, tol=1e-10, u0=None, hessian="analytic", max_iter=100, scale=1.0, with_layout=True):
    """Solve for u with angle sums equal to ``targets`` (max error <= tol).

    Damped Newton: each step is halved until every face satisfies the
    triangle inequality and the residual norm drops.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    mesh = patch.mesh
    theta = target_angles(patch) if targets is None else np.asarray(targets, dtype=float)
    u = np.zeros(mesh.n_vertices) if u0 is None else np.array(u0, dtype=float)
    faces_flat = mesh.faces.ravel()
    n = mesh.n_vertices

    def evaluate(uu):
        lengths = conformal_lengths(mesh, uu, scale)
        a = lengths[mesh.face_edges]
        if not _valid(a):
            return None
        ang = np.stack(hyp.triangle_angles(a[:, 0], a[:, 1], a[:, 2]), axis=1)
        return lengths, ang, np.bincount(faces_flat, ang.ravel(), minlength=n) - theta

    state = evaluate(u)
    if state is None:
        raise TriangleInequalityError("initial metric violates the triangle inequality")
    history = []
    for it in range(max_iter + 1):
        lengths, ang, g = state
        res = float(np.max(np.abs(g)))
        history.append(res)
        if res <= tol:
            break
        if it == max_iter:
            raise ConvergenceError(f"residual {res:.3e} above tol after {max_iter} Newton steps", history)
        if hessian == "analytic":
            local = _local_jacobian(lengths[mesh.face_edges], ang)
            rows = np.repeat(mesh.faces, 3, axis=1).ravel()
            cols = np.tile(mesh.faces, (1, 3)).ravel()
            J = sp.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))
        else:
            J = angle_jacobian(mesh, u, scale, method=hessian)
        # -J is the (positive definite) Hessian of the energy
        delta = spla.spsolve((-J).tocsc(), g)
        norm0 = float(np.linalg.norm(g))
        step = 1.0
        for _ in range(31):
            cand = evaluate(u + step * delta) if np.max(np.abs(u + step * delta)) <= U_CAP else None
            if cand is not None and np.linalg.norm(cand[2]) < norm0:
                break
            step *= 0.5
        else:
            if cand is None:
                raise TriangleInequalityError(
                    "triangle inequality unrecoverable after 30 step halvings; remesh finer"
                )
            raise ConvergenceError(f"line search stalled at residual {res:.3e}", history)
        u = u + step * delta
        state = cand
        log.debug("newton %d: residual %.3e step %.3g", it, res, step)
    flat = FlattenedPatch(patch, u, state[0], theta, history[-1], len(history) - 1, tuple(history), scale)
    if with_layout:
        flat = _with_layout(flat, layout(mesh, flat.lengths))
    return flat


def _with_layout(flat, points):
    return FlattenedPatch(
        flat.patch, flat.u, flat.lengths, flat.targets, flat.residual,
        flat.iterations, flat.history, flat.scale, points,
    )


def layout(mesh, lengths, check=True):
    """Place the mesh in the hyperboloid model realizing ``lengths``.

    Breadth-first over faces: face 0 goes down with its first vertex at the
    apex and its first edge along the positive x direction; every further
    face is attached across an already placed edge, with its third vertex to
    the left of the edge as traversed by that face.
    """
    mesh = _as_mesh(mesh)
    f = mesh.faces
    fe = mesh.face_edges
    n_faces = len(f)
    # edge -> faces
    edge_faces = {}
    for fi in range(n_faces):
        for k in range(3):
            edge_faces.setdefault(int(fe[fi, k]), []).append(fi)
    pos = np.full((mesh.n_vertices, 3), np.nan)
    placed = np.zeros(mesh.n_vertices, dtype=bool)

    def put(vtx, p):
        if not placed[vtx]:
            pos[vtx] = hyp.to_hyperboloid(p)
            placed[vtx] = True

    a, b, c = (int(x) for x in f[0])
    l_ab, l_ac, l_bc = lengths[fe[0, 2]], lengths[fe[0, 1]], lengths[fe[0, 0]]
    alpha = hyp.triangle_angles(l_bc, l_ac, l_ab)[0]
    put(a, hyp.APEX.copy())
    put(b, hyp.point_at(l_ab, 0.0))
    put(c, hyp.point_at(l_ac, float(alpha)))

    seen = np.zeros(n_faces, dtype=bool)
    seen[0] = True
    queue = [0]
    head = 0
    while head < len(queue):
        fi = queue[head]
        head += 1
        for k in range(3):
            for nb in edge_faces[int(fe[fi, k])]:
                if seen[nb]:
                    continue
                seen[nb] = True
                queue.append(nb)
                _place_face(nb, f, fe, lengths, pos, placed, put)
    if not seen.all():
        raise DomainError("mesh is not connected")
    if check:
        e = mesh.edges
        err = np.abs(hyp.distance(pos[e[:, 0]], pos[e[:, 1]]) - lengths)
        if err.max() > LAYOUT_TOL:
            raise DomainError(f"layout reproduces edge lengths only to {err.max():.3e}")
    return pos


def _place_face(fi, f, fe, lengths, pos, placed, put):
    tri = f[fi]
    known = placed[tri]
    if known.all():
        return
    if known.sum() < 2:
        raise DomainError(f"face {fi} reached with fewer than two placed vertices")
    # rotate so corners 0, 1 are placed and corner 2 is new
    k = int(np.flatnonzero(~known)[0])
    order = [(k + 1) % 3, (k + 2) % 3, k]
    i, j, x = (int(tri[m]) for m in order)
    l_ij = lengths[fe[fi, k]]
    l_ix = lengths[fe[fi, order[1]]]
    l_jx = lengths[fe[fi, order[0]]]
    alpha = float(hyp.triangle_angles(l_jx, l_ix, l_ij)[0])
    pi_, pj = pos[i], pos[j]
    e1 = hyp.unit_tangent(pi_, pj)
    e2 = hyp.lorentz_cross(pi_, e1)
    put(x, np.cosh(l_ix) * pi_ + np.sinh(l_ix) * (np.cos(alpha) * e1 + np.sin(alpha) * e2))


@dataclass(frozen=True)
class SideLengths:
    top: float
    bottom: float
    left: float
    right: float

    @property
    def asymmetry(self):
        """|left - right| / left, a diagnostic of the discretization."""
        return abs(self.left - self.right) / self.left

    def to_dict(self):
        return {"top": self.top, "bottom": self.bottom, "left": self.left, "right": self.right,
                "asymmetry": self.asymmetry}


def _edge_index(mesh):
    e = mesh.edges
    return {(int(a), int(b)): i for i, (a, b) in enumerate(e)}


def _chain_edge_lengths(mesh, chain, lengths, index=None):
    index = index or _edge_index(mesh)
    out = []
    for a, b in zip(chain[:-1], chain[1:]):
        key = (int(a), int(b)) if a < b else (int(b), int(a))
        out.append(lengths[index[key]])
    return np.array(out)


def side_lengths(patch, flat):
    """Hyperbolic length of each labeled side, summed along its chain."""
    chains = side_chains(patch)
    index = _edge_index(patch.mesh)
    total = {k: float(_chain_edge_lengths(patch.mesh, ch, flat.lengths, index).sum()) for k, ch in chains.items()}
    return SideLengths(total["TOP"], total["BOTTOM"], total["LEFT"], total["RIGHT"])


def mismatch(sides):
    """top - (left + right); positive when the quad is too wide."""
    return sides.top - (sides.left + sides.right)


@dataclass(frozen=True, eq=False)
class TileAssignment:
    tile: np.ndarray  # per face, 1..4
    color: np.ndarray  # per face, WHITE or BLACK
    midpoints: dict  # "M", "N" -> hyperboloid points
    ties: int = 0
    repaired: int = 0  # faces moved to clear same-colour tile contacts

    def counts(self):
        return {t: int(np.sum(self.tile == t)) for t in (1, 2, 3, 4)}


TILE_COLORS = {1: WHITE, 2: BLACK, 3: BLACK, 4: WHITE}
# same-colour pair -> the tile between them around N
_BETWEEN = {frozenset((2, 3)): 1, frozenset((1, 4)): 3}
MAX_REPAIR_ROUNDS = 8


def _chain_midpoint(mesh, chain, lengths, pos):
    seg = _chain_edge_lengths(mesh, chain, lengths)
    half = 0.5 * seg.sum()
    cum = np.cumsum(seg)
    k = int(np.searchsorted(cum, half))
    before = cum[k] - seg[k]
    a, b = pos[chain[k]], pos[chain[k + 1]]
    return hyp.to_hyperboloid(hyp.geodesic_point(a, b, half - before))


def tile_quad(patch, flat, tie_tol=1e-9):
    """Split the laid-out quad into its four (2,4,6) triangles.

    Tiles: 1 = (V1, M, N), 2 = (V1, N, E1), 3 = (V2, M, N), 4 = (V2, N, E2),
    with M, N the midpoints of TOP and BOTTOM. Faces go to the tile holding
    their centroid. On coarse meshes the thin wedges meeting at N can leave
    two same-coloured tiles sharing an edge; the face of such a pair nearer
    to the tile between them is then moved into it.
    """
    pos = flat.layout if flat.layout is not None else layout(patch.mesh, flat.lengths)
    mesh = patch.mesh
    chains = side_chains(patch)
    M = _chain_midpoint(mesh, chains["TOP"], flat.lengths, pos)
    N = _chain_midpoint(mesh, chains["BOTTOM"], flat.lengths, pos)
    V1, V2 = pos[patch.corners["V1"]], pos[patch.corners["V2"]]
    E1, E2 = pos[patch.corners["E1"]], pos[patch.corners["E2"]]
    centroid = hyp.to_hyperboloid(pos[mesh.faces].sum(axis=1))

    def side(n, ref):
        s = hyp.mdot(centroid, n)
        ties = np.abs(s) < tie_tol
        return np.sign(hyp.mdot(ref, n)) * s > 0, ties

    left_half, t0 = side(hyp.geodesic_normal(M, N), V1)
    near_e1, t1 = side(hyp.geodesic_normal(V1, N), E1)
    near_e2, t2 = side(hyp.geodesic_normal(V2, N), E2)
    # on a tie the face falls to the lower tile id
    left_half |= t0
    near_e1 &= ~t1
    near_e2 &= ~t2
    tile = np.where(left_half, np.where(near_e1, 2, 1), np.where(near_e2, 4, 3)).astype(np.int8)
    ties = int(np.sum(t0 | (t1 & left_half) | (t2 & ~left_half)))
    if ties:
        log.info("%d face centroids within %.1e of a tile boundary", ties, tie_tol)

    # distance proxy from each face to the tile it might be moved into
    walls = {(2, 1): hyp.geodesic_normal(V1, N), (3, 1): hyp.geodesic_normal(M, N),
             (1, 3): hyp.geodesic_normal(M, N), (4, 3): hyp.geodesic_normal(V2, N)}
    pairs = _interior_face_pairs(mesh)
    repaired = 0
    for _ in range(MAX_REPAIR_ROUNDS):
        a, b = pairs[:, 0], pairs[:, 1]
        col = np.vectorize(TILE_COLORS.get)(tile)
        bad = np.flatnonzero((tile[a] != tile[b]) & (col[a] == col[b]))
        if len(bad) == 0:
            break
        for k in bad:
            fa, fb = int(a[k]), int(b[k])
            target = _BETWEEN[frozenset((int(tile[fa]), int(tile[fb])))]
            gap = [abs(hyp.mdot(centroid[f], walls[(int(tile[f]), target)])) for f in (fa, fb)]
            tile[fa if gap[0] <= gap[1] else fb] = target
            repaired += 1
    if repaired:
        log.info("moved %d faces to separate same-coloured tiles", repaired)
    color = np.vectorize(TILE_COLORS.get)(tile).astype(np.int8)
    return TileAssignment(tile, color, {"M": M, "N": N}, ties, repaired)


def _interior_face_pairs(mesh):
    """(f, g) for every interior edge, f < g."""
    fe = mesh.face_edges.ravel()
    faces = np.repeat(np.arange(mesh.n_faces), 3)
    order = np.argsort(fe, kind="stable")
    fe, faces = fe[order], faces[order]
    same = fe[1:] == fe[:-1]
    return np.c_[faces[:-1][same], faces[1:][same]]


def export_layout_svg(flat, path, tiles=None, size=800):
    """Draw the laid-out patch in the Poincare disk."""
    pos = flat.layout if flat.layout is not None else layout(flat.mesh, flat.lengths)
    disk = hyp.to_poincare(pos)
    canvas = SvgCanvas(-1.02, -1.02, 1.02, 1.02, size=size)
    canvas.circle(0.0, 0.0, 1.0)
    for fi, face in enumerate(flat.mesh.faces):
        fill = FILL[int(tiles.color[fi])] if tiles is not None else "#c8c8c8"
        canvas.polygon(disk[face], fill=fill, stroke=fill if tiles is not None else "#606060", stroke_width=0.2)
    return canvas.save(path)
