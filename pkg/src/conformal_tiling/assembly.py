"""Assemble the closed tiled surface from 48 mirrored copies of the patch."""

from dataclasses import dataclass
import itertools
import logging

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import MeshTopologyError
from .implicit_surfaces import contour_euler_characteristic
from .mesh import TriangleMesh

log = logging.getLogger(__name__)

WELD_TOL = 1e-7


def octahedral_group():
    """The 48 signed permutation matrices, permutations in lexicographic
    order and sign patterns (+ before -) within each."""
    out = []
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1, -1), repeat=3):
            g = np.zeros((3, 3), dtype=np.int64)
            for row, (col, s) in enumerate(zip(perm, signs)):
                g[row, col] = s
            out.append(g)
    return out


def determinant(g):
    return int(round(np.linalg.det(g)))


def weld(vertices, faces, tol=WELD_TOL):
    """Merge vertices closer than ``tol``; each cluster keeps its lowest index
    position. Returns (vertices, faces, old-to-new index map)."""
    V = np.asarray(vertices, dtype=float)
    n = len(V)
    pairs = cKDTree(V).query_pairs(tol, output_type="ndarray")
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, label = connected_components(graph, directed=False)
    # renumber clusters in order of first appearance
    first = np.full(label.max() + 1, n)
    np.minimum.at(first, label, np.arange(n))
    order = np.argsort(first)
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    new = rank[label]
    return V[np.sort(first)], new[np.asarray(faces)], new


@dataclass(frozen=True, eq=False)
class TiledSurface:
    mesh: TriangleMesh
    tile: np.ndarray  # per face: copy * 4 + local tile (0..3)
    color: np.ndarray  # per face: 0 white, 1 black
    copy: np.ndarray  # per face: group element index

    @property
    def euler_characteristic(self):
        return self.mesh.euler_characteristic()

    @property
    def genus(self):
        return (2 - self.euler_characteristic) // 2

    def tile_colors(self):
        """Colour of each tile id (faces of one tile share a colour)."""
        out = {}
        for t, c in zip(self.tile.tolist(), self.color.tolist()):
            if out.setdefault(t, c) != c:
                raise MeshTopologyError(f"tile {t} has faces of both colours")
        return out

    def color_conflicts(self):
        """Mesh edges separating two different tiles of the same colour."""
        fe = self.mesh.face_edges
        n_e = self.mesh.n_edges
        owner = np.full((n_e, 2), -1)
        fill = np.zeros(n_e, dtype=int)
        for f, row in enumerate(fe):
            for e in row:
                owner[e, fill[e]] = f
                fill[e] += 1
        a, b = owner[:, 0], owner[:, 1]
        ok = b >= 0
        a, b = a[ok], b[ok]
        diff_tile = self.tile[a] != self.tile[b]
        return int(np.sum(diff_tile & (self.color[a] == self.color[b])))

    def summary(self):
        colors = self.tile_colors()
        vals = np.array(list(colors.values()))
        return {
            "n_vertices": self.mesh.n_vertices,
            "n_faces": self.mesh.n_faces,
            "euler_characteristic": self.euler_characteristic,
            "genus": self.genus,
            "closed": self.mesh.is_closed(),
            "oriented": self.mesh.is_consistently_oriented(),
            "copies": int(len(np.unique(self.copy))),
            "tiles": len(colors),
            "white_tiles": int(np.sum(vals == 0)),
            "black_tiles": int(np.sum(vals == 1)),
            "color_conflicts": self.color_conflicts(),
            "signed_volume": self.mesh.signed_volume(),
        }


def assemble(patch, tiles, tol=WELD_TOL, validate=True):
    """Reflect the patch by every octahedral symmetry and weld.

    ``tiles`` is the per-face assignment from ``tile_quad``. Copies made by
    a reflection (det -1) have their winding reversed so the whole surface
    is consistently oriented, and their colours swapped.
    """
    V = patch.mesh.vertices
    F = patch.mesh.faces
    base_tile = np.asarray(tiles.tile, dtype=np.int64) - 1
    base_color = np.asarray(tiles.color, dtype=np.int8)
    verts, faces, tile, color, copy = [], [], [], [], []
    for k, g in enumerate(octahedral_group()):
        flip = determinant(g) < 0
        verts.append(V @ g.T)
        faces.append((F[:, ::-1] if flip else F) + k * len(V))
        tile.append(4 * k + base_tile)
        color.append(base_color ^ np.int8(flip))
        copy.append(np.full(len(F), k))
    Vw, Fw, _ = weld(np.concatenate(verts), np.concatenate(faces), tol)
    surface = TiledSurface(
        TriangleMesh(Vw, Fw), np.concatenate(tile), np.concatenate(color), np.concatenate(copy)
    )
    if validate:
        validate_surface(surface, patch.c)
    return surface


def validate_surface(surface, c=None):
    m = surface.mesh
    counts = m.edge_face_counts
    if np.any(counts > 2):
        bad = m.edges[counts > 2][:5]
        raise MeshTopologyError(f"welding produced non-manifold edges, e.g. between vertices {bad.tolist()}")
    if not m.is_closed():
        bad = m.edges[counts == 1][:5]
        raise MeshTopologyError(f"surface has open edges, e.g. {bad.tolist()}")
    if not m.is_consistently_oriented():
        raise MeshTopologyError("surface winding is inconsistent")
    if c is not None:
        expected = contour_euler_characteristic(c)
        if m.euler_characteristic() != expected:
            raise MeshTopologyError(
                f"welded mesh has chi={m.euler_characteristic()}, Morse count gives {expected}"
            )
    if surface.color_conflicts():
        raise MeshTopologyError(f"{surface.color_conflicts()} edges separate equal-coloured tiles")
    return surface
