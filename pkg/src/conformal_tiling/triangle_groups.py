"""(p, q, r) triangle-group tilings of the sphere, plane and hyperbolic plane.

A seed triangle with angles pi/p, pi/q, pi/r is reflected across its edges
breadth first. Points live on the unit sphere (3-vectors), in the plane
(2-vectors) or on the hyperboloid (3-vectors); tiles found along different
reflection paths are merged by hashing their incenters.
"""

from dataclasses import dataclass
from fractions import Fraction
import itertools

import numpy as np

from . import hyperbolic as hyp
from .errors import DomainError
from .svg import FILL, SvgCanvas

SPHERE, EUCLIDEAN, HYPERBOLIC = "sphere", "euclidean", "hyperbolic"
KEY_DECIMALS = 7
MAX_TILES = 10**6


@dataclass(frozen=True)
class Signature:
    p: int
    q: int
    r: int

    def __post_init__(self):
        for k in (self.p, self.q, self.r):
            if int(k) != k or k < 2:
                raise DomainError(f"triangle group orders must be integers >= 2, got {self.as_tuple()}")

    def as_tuple(self):
        return (self.p, self.q, self.r)

    @property
    def angles(self):
        return (np.pi / self.p, np.pi / self.q, np.pi / self.r)

    @property
    def geometry(self):
        return classify(self)


def classify(sig):
    """Sphere, euclidean or hyperbolic by the sign of 1/p + 1/q + 1/r - 1."""
    if not isinstance(sig, Signature):
        sig = Signature(*sig)
    s = Fraction(1, sig.p) + Fraction(1, sig.q) + Fraction(1, sig.r)
    if s > 1:
        return SPHERE
    if s == 1:
        return EUCLIDEAN
    return HYPERBOLIC


@dataclass(frozen=True, eq=False)
class Tile:
    vertices: np.ndarray  # rows A, B, C with angles pi/p, pi/q, pi/r
    color: int  # 0 white, 1 black
    word_length: int


# per-geometry primitives ----------------------------------------------------

def _sphere_reflect(x, a, b):
    n = np.cross(a, b)
    return x - 2.0 * (x @ n) / (n @ n) * n


def _plane_reflect(x, a, b):
    d = (b - a) / np.linalg.norm(b - a)
    w = x - a
    return a + 2.0 * (w @ d) * d - w


def _hyp_reflect(x, a, b):
    return hyp.reflect(x, hyp.lorentz_cross(a, b))


_REFLECT = {SPHERE: _sphere_reflect, EUCLIDEAN: _plane_reflect, HYPERBOLIC: _hyp_reflect}


def side_lengths(vertices, geometry):
    """Sides (a, b, c) opposite the vertices (A, B, C)."""
    A, B, C = vertices
    if geometry == SPHERE:
        d = lambda x, y: np.arccos(np.clip(x @ y, -1.0, 1.0))  # noqa: E731
    elif geometry == EUCLIDEAN:
        d = lambda x, y: np.linalg.norm(x - y)  # noqa: E731
    else:
        d = hyp.distance
    return np.array([d(B, C), d(A, C), d(A, B)], dtype=float)


def tile_angles(vertices, geometry):
    """Interior angles at (A, B, C), measured in the ambient geometry."""
    V = np.asarray(vertices, dtype=float)
    out = []
    for i in range(3):
        p, q, r = V[i], V[(i + 1) % 3], V[(i + 2) % 3]
        if geometry == HYPERBOLIC:
            out.append(float(hyp.angle_at(p, q, r)))
            continue
        if geometry == SPHERE:
            u, w = q - (p @ q) * p, r - (p @ r) * p
        else:
            u, w = q - p, r - p
        cos = (u @ w) / (np.linalg.norm(u) * np.linalg.norm(w))
        out.append(float(np.arccos(np.clip(cos, -1.0, 1.0))))
    return np.array(out)


def tile_area(vertices, geometry):
    """Angle excess or defect; shoelace formula in the plane."""
    if geometry == EUCLIDEAN:
        A, B, C = np.asarray(vertices, dtype=float)
        return 0.5 * abs(float(np.cross(B - A, C - A)))
    s = float(tile_angles(vertices, geometry).sum())
    return s - np.pi if geometry == SPHERE else np.pi - s


def incenter(vertices, geometry):
    V = np.asarray(vertices, dtype=float)
    a = side_lengths(V, geometry)
    if geometry == EUCLIDEAN:
        return (a @ V) / a.sum()
    w = np.sin(a) if geometry == SPHERE else np.sinh(a)
    x = w @ V
    if geometry == SPHERE:
        return x / np.linalg.norm(x)
    return hyp.to_hyperboloid(x)


def base_triangle(sig):
    """Canonical seed tile.

    A sits at the north pole / origin / hyperboloid apex, B on the positive
    x direction and C above the x axis. Euclidean seeds are scaled so the
    shortest side is 1.
    """
    if not isinstance(sig, Signature):
        sig = Signature(*sig)
    al, be, ga = sig.angles
    geometry = classify(sig)
    if geometry == EUCLIDEAN:
        sides = np.array([np.sin(al), np.sin(be), np.sin(ga)])
        sides /= sides.min()
        b, c = sides[1], sides[2]
        V = np.array([[0.0, 0.0], [c, 0.0], [b * np.cos(al), b * np.sin(al)]])
    elif geometry == HYPERBOLIC:
        b = hyp.side_from_angles(be, al, ga)
        c = hyp.side_from_angles(ga, al, be)
        V = np.array([hyp.APEX, hyp.point_at(c, 0.0), hyp.point_at(b, al)])
    else:
        b = np.arccos((np.cos(be) + np.cos(al) * np.cos(ga)) / (np.sin(al) * np.sin(ga)))
        c = np.arccos((np.cos(ga) + np.cos(al) * np.cos(be)) / (np.sin(al) * np.sin(be)))
        pole = lambda d, th: np.array([np.sin(d) * np.cos(th), np.sin(d) * np.sin(th), np.cos(d)])  # noqa: E731
        V = np.array([[0.0, 0.0, 1.0], pole(c, 0.0), pole(b, al)])
    return Tile(V, 0, 0)


class _KeyIndex:
    """Hash of rounded points; lookups probe neighbouring cells so two
    copies of a point straddling a rounding boundary still match."""

    def __init__(self, decimals=KEY_DECIMALS):
        self.scale = 10.0**decimals
        self.tol = 0.5 / self.scale
        self.cells = {}

    def _cell(self, x):
        return tuple(int(v) for v in np.floor(np.asarray(x) * self.scale))

    def find(self, x):
        cell = self._cell(x)
        for off in itertools.product((-1, 0, 1), repeat=len(cell)):
            hit = self.cells.get(tuple(c + o for c, o in zip(cell, off)))
            if hit is not None and np.max(np.abs(hit[0] - x)) < self.tol:
                return hit[1]
        return None

    def add(self, x, value):
        self.cells[self._cell(x)] = (np.asarray(x, dtype=float), value)


def _key_point(vertices, geometry):
    x = incenter(vertices, geometry)
    return hyp.to_poincare(x) if geometry == HYPERBOLIC else x


@dataclass(frozen=True, eq=False)
class Tiling:
    signature: Signature
    geometry: str
    tiles: tuple
    depth: int

    def __len__(self):
        return len(self.tiles)

    def __iter__(self):
        return iter(self.tiles)

    def __getitem__(self, i):
        return self.tiles[i]


def generate_tiling(sig, depth, max_tiles=MAX_TILES):
    """All tiles within ``depth`` reflections of the seed, in BFS order.

    Output for depth d is a prefix of the output for any larger depth.
    """
    if not isinstance(sig, Signature):
        sig = Signature(*sig)
    if depth < 0:
        raise DomainError("depth must be >= 0")
    geometry = classify(sig)
    reflect = _REFLECT[geometry]
    seed = base_triangle(sig)
    tiles = [seed]
    index = _KeyIndex()
    index.add(_key_point(seed.vertices, geometry), 0)
    frontier = [seed]
    for gen in range(1, depth + 1):
        nxt = []
        for tile in frontier:
            for k in range(3):
                V = tile.vertices.copy()
                V[k] = reflect(V[k], V[(k + 1) % 3], V[(k + 2) % 3])
                key = _key_point(V, geometry)
                if index.find(key) is not None:
                    continue
                if len(tiles) >= max_tiles:
                    raise DomainError(f"tile count cap {max_tiles} exceeded at depth {gen}")
                t = Tile(V, 1 - tile.color, gen)
                index.add(key, len(tiles))
                tiles.append(t)
                nxt.append(t)
        if not nxt:
            break
        frontier = nxt
    return Tiling(sig, geometry, tuple(tiles), int(depth))


def adjacency(tiling):
    """Edge-adjacency lists: neighbour of tile i across the edge opposite
    vertex k (or -1 when that neighbour was not generated)."""
    geometry = tiling.geometry
    reflect = _REFLECT[geometry]
    index = _KeyIndex()
    for i, t in enumerate(tiling.tiles):
        index.add(_key_point(t.vertices, geometry), i)
    nbrs = np.full((len(tiling.tiles), 3), -1, dtype=np.int64)
    for i, t in enumerate(tiling.tiles):
        for k in range(3):
            V = t.vertices.copy()
            V[k] = reflect(V[k], V[(k + 1) % 3], V[(k + 2) % 3])
            j = index.find(_key_point(V, geometry))
            if j is not None:
                nbrs[i, k] = j
    return nbrs


def ring_counts(tiling):
    """Number of tiles at each edge-graph distance from the seed tile."""
    if len(tiling.tiles) == 0:
        return []
    nbrs = adjacency(tiling)
    dist = np.full(len(nbrs), -1)
    dist[0] = 0
    frontier = [0]
    while frontier:
        nxt = []
        for i in frontier:
            for j in nbrs[i]:
                if j >= 0 and dist[j] < 0:
                    dist[j] = dist[i] + 1
                    nxt.append(int(j))
        frontier = nxt
    return np.bincount(dist[dist >= 0]).tolist()


def growth_ratios(counts):
    c = np.asarray(counts, dtype=float)
    return c[1:] / c[:-1]


def _edge_points(a, b, geometry, n=8):
    t = np.linspace(0.0, 1.0, n, endpoint=False)[:, None]
    pts = (1.0 - t) * a + t * b
    if geometry == SPHERE:
        return pts / np.linalg.norm(pts, axis=1, keepdims=True)
    if geometry == HYPERBOLIC:
        return hyp.to_hyperboloid(pts)
    return pts


def _project(pts, geometry):
    if geometry == HYPERBOLIC:
        return hyp.to_poincare(pts)
    return pts[:, :2]


def export_tiling_svg(tiling, path, size=800):
    """Poincare disk, plane, or orthographic view of the front hemisphere."""
    geometry = tiling.geometry if tiling is not None else EUCLIDEAN
    tiles = list(tiling.tiles) if tiling is not None else []
    if geometry == EUCLIDEAN and tiles:
        allv = np.concatenate([t.vertices for t in tiles])
        lo, hi = allv.min(axis=0), allv.max(axis=0)
        pad = 0.02 * max(hi - lo)
        canvas = SvgCanvas(lo[0] - pad, lo[1] - pad, hi[0] + pad, hi[1] + pad, size=size)
    else:
        canvas = SvgCanvas(-1.02, -1.02, 1.02, 1.02, size=size)
    if geometry != EUCLIDEAN:
        canvas.circle(0.0, 0.0, 1.0)
    for t in tiles:
        V = t.vertices
        if geometry == SPHERE and V.mean(axis=0)[2] < 0.0:
            continue
        ring = np.concatenate([_edge_points(V[k], V[(k + 1) % 3], geometry) for k in range(3)])
        canvas.polygon(_project(ring, geometry), fill=FILL[t.color], stroke="#808080", stroke_width=0.3)
    return canvas.save(path)


def tiling_to_dict(tiling):
    return {
        "signature": list(tiling.signature.as_tuple()),
        "geometry": tiling.geometry,
        "depth": tiling.depth,
        "tiles": [
            {"vertices": t.vertices.tolist(), "color": int(t.color), "word_length": int(t.word_length)}
            for t in tiling.tiles
        ],
    }
