"""Indexed triangle meshes and the combinatorial queries the pipeline needs."""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import MeshTopologyError

DEGENERATE_AREA = 1e-14


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Vertices (n, 3) and faces (m, 3) with derived edge data.

    ``face_edges[f, k]`` is the edge opposite corner k of face f.
    """

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=float)
        f = np.ascontiguousarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if v.ndim != 2 or v.shape[1] not in (2, 3):
            raise ValueError("vertices must have shape (n, 3)")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise ValueError("face index out of range")
        v.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    @cached_property
    def _edge_data(self):
        f = self.faces
        opp = np.concatenate([f[:, [1, 2]], f[:, [2, 0]], f[:, [0, 1]]])
        edges, inverse, counts = np.unique(
            np.sort(opp, axis=1), axis=0, return_inverse=True, return_counts=True
        )
        return edges, inverse.reshape(3, -1).T.copy(), counts

    @property
    def edges(self):
        return self._edge_data[0]

    @property
    def face_edges(self):
        return self._edge_data[1]

    @property
    def edge_face_counts(self):
        return self._edge_data[2]

    @property
    def n_edges(self):
        return len(self.edges)

    @cached_property
    def edge_lengths(self):
        e = self.edges
        return np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1)

    def euler_characteristic(self):
        return self.n_vertices - self.n_edges + self.n_faces

    def face_areas(self):
        v = self.vertices
        f = self.faces
        a = v[f[:, 1]] - v[f[:, 0]]
        b = v[f[:, 2]] - v[f[:, 0]]
        if v.shape[1] == 2:
            return 0.5 * np.abs(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])
        return 0.5 * np.linalg.norm(np.cross(a, b), axis=1)

    def corner_angles(self):
        """Euclidean corner angles, shape (m, 3), in radians."""
        v = self.vertices
        f = self.faces
        out = np.empty(f.shape)
        for k in range(3):
            p = v[f[:, k]]
            a = v[f[:, (k + 1) % 3]] - p
            b = v[f[:, (k + 2) % 3]] - p
            cos = np.sum(a * b, axis=1) / (
                np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1)
            )
            out[:, k] = np.arccos(np.clip(cos, -1.0, 1.0))
        return out

    def boundary_edges(self):
        return self.edges[self.edge_face_counts == 1]

    def boundary_vertices(self):
        return np.unique(self.boundary_edges())

    def is_manifold(self):
        return bool(np.all(self.edge_face_counts <= 2))

    def is_closed(self):
        return bool(np.all(self.edge_face_counts == 2))

    def boundary_loops(self):
        """Ordered boundary loops, each a vertex array following face orientation."""
        f = self.faces
        directed = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        bset = {tuple(e) for e in self.boundary_edges()}
        succ = {}
        for a, b in directed:
            key = (a, b) if a < b else (b, a)
            if key in bset:
                if a in succ:
                    raise MeshTopologyError(f"boundary vertex {a} is pinched")
                succ[int(a)] = int(b)
        loops = []
        remaining = set(succ)
        while remaining:
            start = min(remaining)
            loop = [start]
            remaining.discard(start)
            cur = succ[start]
            while cur != start:
                if cur not in remaining:
                    raise MeshTopologyError(f"boundary walk broke at vertex {cur}")
                loop.append(cur)
                remaining.discard(cur)
                cur = succ[cur]
            loops.append(np.array(loop, dtype=np.int64))
        return loops

    def is_consistently_oriented(self):
        f = self.faces
        directed = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        uniq = np.unique(directed, axis=0)
        return len(uniq) == len(directed)

    def vertex_neighbors(self):
        """CSR-style adjacency: (offsets, neighbors)."""
        e = self.edges
        n = self.n_vertices
        both = np.concatenate([e, e[:, ::-1]])
        order = np.lexsort((both[:, 1], both[:, 0]))
        both = both[order]
        offsets = np.searchsorted(both[:, 0], np.arange(n + 1))
        return offsets, both[:, 1]

    def signed_volume(self):
        v = self.vertices
        f = self.faces
        return float(np.sum(np.einsum("ij,ij->i", v[f[:, 0]], np.cross(v[f[:, 1]], v[f[:, 2]]))) / 6.0)

    def validate(self):
        """Raise :class:`MeshTopologyError` unless the basic mesh invariants hold."""
        if not self.is_manifold():
            bad = self.edges[self.edge_face_counts > 2]
            raise MeshTopologyError(f"non-manifold edges, e.g. {bad[0].tolist()}")
        areas = self.face_areas()
        if np.any(areas <= DEGENERATE_AREA):
            raise MeshTopologyError(f"degenerate face {int(np.argmin(areas))}")
        l = self.edge_lengths[self.face_edges]
        if np.any(2.0 * l.max(axis=1) >= l.sum(axis=1)):
            raise MeshTopologyError("face violates the triangle inequality")


@dataclass(frozen=True)
class QualityReport:
    min_angle: float
    median_angle: float
    max_angle: float
    median_edge: float
    min_edge: float
    max_edge: float
    edge_histogram: tuple
    degenerate_faces: tuple = ()
    max_residual: float = float("nan")
    n_vertices: int = 0
    n_faces: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        d = dict(self.__dict__)
        d["edge_histogram"] = {"counts": list(self.edge_histogram[0]), "bin_edges": list(self.edge_histogram[1])}
        d["degenerate_faces"] = list(self.degenerate_faces)
        return d
