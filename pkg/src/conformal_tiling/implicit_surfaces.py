"""The Chmutov quartic family F(x, y, z) = c.

    F(x, y, z) = 8(x^4 + y^4 + z^4) - 8(x^2 + y^2 + z^2) + 3

F is a sum of identical one-variable quartics g(t) = 8t^4 - 8t^2 (plus the
constant), so everything about its critical set can be read off from g,
whose critical points are t = 0 and t = +-1/sqrt(2).
"""

from dataclasses import dataclass
import itertools

import numpy as np

from .errors import ProjectionError

DEGREE = 4
NODE_COORD = 1.0 / np.sqrt(2.0)
CRITICAL_VALUES = (3.0, 1.0, -1.0, -3.0)

# unnormalized directions of the three rotation axes of the cube
AXES = {
    "face": np.array([1.0, 0.0, 0.0]),
    "edge": np.array([1.0, 1.0, 0.0]),
    "vertex": np.array([1.0, 1.0, 1.0]),
}


def eval_field(p):
    """Evaluate F at a point or an array of points with trailing dimension 3."""
    p = np.asarray(p, dtype=float)
    p2 = p * p
    return 8.0 * np.sum(p2 * p2, axis=-1) - 8.0 * np.sum(p2, axis=-1) + 3.0


def eval_gradient(p):
    p = np.asarray(p, dtype=float)
    return 32.0 * p**3 - 16.0 * p


@dataclass(frozen=True)
class Node:
    """A singular point of a contour surface."""

    position: np.ndarray
    value: float

    @property
    def index(self):
        """Morse index: one negative Hessian direction per zero coordinate."""
        return int(np.sum(self.position == 0.0))


def critical_points():
    """All 27 critical points of F as :class:`Node` objects.

    Each coordinate independently sits at a critical point of g, so the
    critical set is {0, +-1/sqrt(2)}^3 and F there equals 3 - 2k, where k
    counts the nonzero coordinates.
    """
    nodes = []
    for pattern in itertools.product((0.0, NODE_COORD, -NODE_COORD), repeat=3):
        pos = np.array(pattern)
        k = int(np.count_nonzero(pos))
        nodes.append(Node(pos, 3.0 - 2.0 * k))
    return nodes


def find_nodes(c, atol=1e-12):
    """Critical points lying on S(c); empty unless c is a critical value."""
    return [n for n in critical_points() if abs(n.value - c) <= atol]


def sublevel_euler_characteristic(c):
    """Euler characteristic of {F <= c} from the Morse counts below c."""
    return sum((-1) ** n.index for n in critical_points() if n.value < c)


def contour_euler_characteristic(c):
    """Euler characteristic of S(c) for a regular value c.

    S(c) bounds the compact 3-manifold {F <= c}, so chi(S) = 2 chi({F <= c}).
    """
    if any(abs(c - v) < 1e-12 for v in CRITICAL_VALUES):
        raise ValueError(f"c={c} is a critical value; S(c) is singular")
    return 2 * sublevel_euler_characteristic(c)


def axis_intersections(c, axis):
    """Positive t with F(t d) = c, d the unnormalized axis direction.

    Along d = (1,...,1,0,...) with n ones, F(t d) = 8n t^4 - 8n t^2 + 3,
    a quadratic in T = t^2.
    """
    try:
        n = int(AXES[axis].sum())
    except KeyError:
        raise ValueError(f"unknown axis {axis!r}; expected face, edge or vertex") from None
    disc = 1.0 - (3.0 - c) / (2.0 * n)
    if disc < 0.0:
        return []
    root = np.sqrt(disc)
    roots = sorted({0.5 - 0.5 * root, 0.5 + 0.5 * root})
    return [float(np.sqrt(T)) for T in roots if T > 0.0]


def axis_points(c, axis):
    return [t * AXES[axis] for t in axis_intersections(c, axis)]


def project_to_contour(p, c, tol=1e-12, max_iter=50):
    """Move ``p`` along the gradient line until |F - c| < tol.

    Uses Newton steps q <- q - (F(q) - c) grad F / |grad F|^2, halving the
    step whenever the residual would not decrease.
    """
    q = np.array(p, dtype=float)
    r = eval_field(q) - c
    if abs(r) < tol:
        return q
    for _ in range(max_iter):
        g = eval_gradient(q)
        gg = float(g @ g)
        if gg < 1e-24:
            raise ProjectionError(f"gradient vanishes at {q.tolist()}", last=q)
        step = -r / gg * g
        t = 1.0
        for _ in range(30):
            cand = q + t * step
            rc = eval_field(cand) - c
            if abs(rc) < abs(r):
                break
            t *= 0.5
        else:
            raise ProjectionError("line search failed to reduce the residual", last=q)
        q, r = cand, rc
        if abs(r) < tol:
            return q
    raise ProjectionError(
        f"no convergence after {max_iter} iterations (residual {abs(r):.3e})", last=q
    )
