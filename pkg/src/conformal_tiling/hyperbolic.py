"""Hyperboloid-model helpers.

Points of the hyperbolic plane are (x, y, t) with x^2 + y^2 - t^2 = -1 and
t > 0, under the Minkowski form <a, b> = a_x b_x + a_y b_y - a_t b_t.
"""

import numpy as np

MINKOWSKI = np.diag([1.0, 1.0, -1.0])
APEX = np.array([0.0, 0.0, 1.0])


def mdot(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] - a[..., 2] * b[..., 2]


def lorentz_cross(a, b):
    """J(a x b): Minkowski-orthogonal to both a and b.

    For a point P and unit tangent e at P, ``lorentz_cross(P, e)`` is e
    rotated by +90 degrees (counter-clockwise seen from above the apex).
    """
    return np.cross(a, b) * np.array([1.0, 1.0, -1.0])


def to_hyperboloid(p):
    """Rescale timelike vectors (t > 0) onto the unit hyperboloid."""
    p = np.asarray(p, dtype=float)
    return p / np.sqrt(-mdot(p, p))[..., None]


def distance(a, b):
    return np.arccosh(np.maximum(-mdot(a, b), 1.0))


def point_at(d, theta):
    """Point at distance d from the apex in direction theta."""
    return np.array([np.sinh(d) * np.cos(theta), np.sinh(d) * np.sin(theta), np.cosh(d)])


def unit_tangent(p, q):
    """Unit tangent at p pointing along the geodesic toward q."""
    v = q + mdot(p, q)[..., None] * p
    return v / np.sqrt(mdot(v, v))[..., None]


def geodesic_point(p, q, d):
    """Point at distance d from p along the geodesic through q."""
    e = unit_tangent(p, q)
    return np.cosh(d) * p + np.sinh(d) * e


def geodesic_normal(p, q):
    """Spacelike unit normal of the geodesic through p and q.

    The sign of <x, n> tells which side of the geodesic x lies on; x lies to
    the left of the directed geodesic p -> q when <x, n> > 0.
    """
    n = lorentz_cross(p, q)
    return n / np.sqrt(mdot(n, n))[..., None]


def reflect(x, n):
    """Reflect x in the geodesic (or great circle) with spacelike normal n."""
    return x - 2.0 * (mdot(x, n) / mdot(n, n))[..., None] * n


def to_poincare(p):
    p = np.asarray(p, dtype=float)
    return p[..., :2] / (1.0 + p[..., 2:3])


def angle_at(p, q, r):
    """Angle at p between the geodesics toward q and toward r."""
    a = unit_tangent(p, q)
    b = unit_tangent(p, r)
    return np.arccos(np.clip(mdot(a, b), -1.0, 1.0))


def triangle_angles(a, b, c):
    """Angles opposite hyperbolic side lengths a, b, c (vectorized).

    Half-angle form tan^2(alpha/2) = sinh(s-b) sinh(s-c) / (sinh s sinh(s-a)),
    s the semi-perimeter; accurate for small triangles where the cosine law
    cancels badly.
    """
    a, b, c = (np.asarray(x, dtype=float) for x in (a, b, c))
    s = 0.5 * (a + b + c)
    ss = np.sinh(s)
    sa, sb, sc = np.sinh(s - a), np.sinh(s - b), np.sinh(s - c)
    alpha = 2.0 * np.arctan2(np.sqrt(sb * sc), np.sqrt(ss * sa))
    beta = 2.0 * np.arctan2(np.sqrt(sa * sc), np.sqrt(ss * sb))
    gamma = 2.0 * np.arctan2(np.sqrt(sa * sb), np.sqrt(ss * sc))
    return alpha, beta, gamma


def side_from_angles(alpha, beta, gamma):
    """Length of the side opposite alpha in the triangle with angles alpha, beta, gamma."""
    return np.arccosh((np.cos(alpha) + np.cos(beta) * np.cos(gamma)) / (np.sin(beta) * np.sin(gamma)))
