"""Torus of revolution: conformal modulus, Villarceau circles, square tiling.

The torus ((R + r cos th) cos ph, (R + r cos th) sin ph, r sin th) has the
conformal metric factor (R + r cos th)^2 (du^2 + dph^2) with

    u(th) = int_0^th r dt / (R + r cos t),

so it is conformally a flat 2 pi mu x 2 pi rectangle, mu = r / sqrt(R^2 - r^2).
mu = 1 is the "square" torus R = r sqrt 2.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import DomainError
from .mesh import TriangleMesh

CROSS_CHECK_TOL = 1e-10


@dataclass(frozen=True)
class TorusSpec:
    R: float
    r: float

    def __post_init__(self):
        if not (np.isfinite(self.R) and np.isfinite(self.r)) or not (self.R > self.r > 0):
            raise DomainError(f"torus needs R > r > 0, got R={self.R}, r={self.r}")

    def point(self, theta, phi):
        theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
        rho = self.R + self.r * np.cos(theta)
        return np.stack([rho * np.cos(phi), rho * np.sin(phi), self.r * np.sin(theta)], axis=-1)

    def implicit(self, p):
        p = np.asarray(p, dtype=float)
        return (np.hypot(p[..., 0], p[..., 1]) - self.R) ** 2 + p[..., 2] ** 2 - self.r**2

    def to_dict(self):
        return {"R": self.R, "r": self.r}


def _modulus_closed(R, r):
    return r / np.sqrt(R * R - r * r)


def _modulus_quad(R, r):
    val, _ = quad(lambda t: r / (R + r * np.cos(t)), 0.0, 2.0 * np.pi, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val / (2.0 * np.pi)


def conformal_modulus(spec):
    """mu = r / sqrt(R^2 - r^2), cross-checked against quadrature."""
    closed = _modulus_closed(spec.R, spec.r)
    numeric = _modulus_quad(spec.R, spec.r)
    if abs(closed - numeric) > CROSS_CHECK_TOL * max(1.0, closed):
        raise DomainError(f"modulus cross-check failed: {closed!r} vs {numeric!r}")
    return float(closed)


def solve_square_torus(r=1.0):
    """R with modulus 1 for the given r, by root finding on mu(R) - 1."""
    if not r > 0:
        raise DomainError("r must be positive")
    lo = r * (1.0 + 1e-3)
    R = brentq(lambda R: _modulus_quad(R, r) - 1.0, lo, 10.0 * r, xtol=1e-15 * r, rtol=1e-15)
    if abs(R - r * np.sqrt(2.0)) > CROSS_CHECK_TOL * r:
        raise DomainError(f"square torus root {R!r} disagrees with r*sqrt(2)")
    return TorusSpec(float(R), float(r))


def u_of_theta(spec, theta):
    """Conformal coordinate along the meridian."""
    R, r = spec.R, spec.r
    theta = float(theta)
    turns = np.floor((theta + np.pi) / (2.0 * np.pi))
    base = theta - 2.0 * np.pi * turns
    val, _ = quad(lambda t: r / (R + r * np.cos(t)), 0.0, base, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val + turns * 2.0 * np.pi * _modulus_closed(R, r)


def theta_of_u(spec, u):
    """Inverse of u_of_theta."""
    period = 2.0 * np.pi * _modulus_closed(spec.R, spec.r)
    turns = np.floor((u + 0.5 * period) / period)
    base = u - turns * period
    if abs(base) >= 0.5 * period - 1e-15:
        th = np.copysign(np.pi, base)
    else:
        th = brentq(lambda t: u_of_theta(spec, t) - base, -np.pi, np.pi, xtol=1e-15, rtol=1e-15)
    return th + 2.0 * np.pi * turns


def thetas_of_u(spec, us):
    """theta_of_u over an array, solving once per distinct value."""
    us = np.asarray(us, dtype=float)
    uniq, inv = np.unique(us, return_inverse=True)
    return np.array([theta_of_u(spec, u) for u in uniq])[inv].reshape(us.shape)


# Villarceau circles -----------------------------------------------------------

@dataclass(frozen=True)
class Circle:
    center: np.ndarray
    radius: float
    normal: np.ndarray

    def points(self, n):
        e1, e2 = _circle_frame(self)
        t = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)[:, None]
        return self.center + self.radius * (np.cos(t) * e1 + np.sin(t) * e2)


def _rotz(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def villarceau_circles(spec, rotation=0.0, tilt_sign=1, samples=64, tol=1e-10):
    """The two circles cut by a bitangent plane through the origin.

    The plane contains the y axis and is tilted by beta (sin beta = r/R,
    sign chosen by ``tilt_sign``) from the xy plane; ``rotation`` turns the
    whole configuration about the z axis. The two circles have radius R and
    centres at distance r from the axis.
    """
    R, r = spec.R, spec.r
    beta = tilt_sign * np.arcsin(r / R)
    normal = np.array([-np.sin(beta), 0.0, np.cos(beta)])
    rot = _rotz(rotation)
    circles = tuple(
        Circle(rot @ np.array([0.0, sy * r, 0.0]), float(R), rot @ normal) for sy in (1.0, -1.0)
    )
    for circ in circles:
        res = np.max(np.abs(spec.implicit(circ.points(samples))))
        if res > tol * max(1.0, R * R):
            raise DomainError(f"Villarceau circle misses the torus by {res:.3e}")
    return circles


def _circle_frame(circ):
    e1 = np.cross(circ.normal, [0.0, 0.0, 1.0])
    e1 = e1 / np.linalg.norm(e1) if np.linalg.norm(e1) > 1e-12 else np.array([1.0, 0.0, 0.0])
    return e1, np.cross(circ.normal, e1)


def _circle_circle_intersections(c1, c2, n=720):
    """Points where circle c1 meets circle c2 (circles in general position)."""
    e1, e2 = _circle_frame(c1)

    def p(t):
        return c1.center + c1.radius * (np.cos(t) * e1 + np.sin(t) * e2)

    def f(t):
        return (p(t) - c2.center) @ c2.normal

    ts = np.linspace(0.0, 2.0 * np.pi, n + 1)
    fs = np.array([f(t) for t in ts])
    hits = []
    for a, b, fa, fb in zip(ts[:-1], ts[1:], fs[:-1], fs[1:]):
        if fa == 0.0 or fa * fb < 0.0:
            q = p(a if fa == 0.0 else brentq(f, a, b, xtol=1e-15))
            if abs(np.linalg.norm(q - c2.center) - c2.radius) < 1e-8 * c2.radius:
                hits.append(q)
    return hits


def _torus_tangent_direction(spec, point, tangent):
    """Orient a surface tangent so its longitude (phi) component is positive."""
    x, y, _ = point
    e_phi = np.array([-y, x, 0.0])
    return tangent if tangent @ e_phi > 0 else -tangent


def _circle_tangent(circ, point):
    t = np.cross(circ.normal, point - circ.center)
    return t / np.linalg.norm(t)


def _meridian_tangent(spec, point):
    x, y, z = point
    rho = np.hypot(x, y)
    radial = np.array([x / rho, y / rho, 0.0])
    d = (rho - spec.R) * radial + z * np.array([0.0, 0.0, 1.0])
    t = np.cross(np.cross(radial, [0.0, 0.0, 1.0]), d)
    return t / np.linalg.norm(t)


def _angle_deg(a, b):
    return float(np.degrees(np.arccos(np.clip(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)), -1.0, 1.0))))


def villarceau_angle_closed_form(spec):
    return float(np.degrees(np.arccos(1.0 - 2.0 * spec.r**2 / spec.R**2)))


@dataclass(frozen=True)
class VillarceauAngle:
    degrees: float
    spread: float
    meridian_degrees: float
    closed_form: float
    samples: int

    def to_dict(self):
        return {
            "villarceau_angle": self.degrees,
            "spread": self.spread,
            "meridian_angle": self.meridian_degrees,
            "closed_form": self.closed_form,
            "samples": self.samples,
        }


def villarceau_angle(spec, configurations=16, check_tol=1e-8):
    """Angle between Villarceau circles of the two families.

    A circle of one family (positive tilt) is intersected with circles of
    the other family (negative tilt) at ``configurations`` rotations about
    the axis. Tangents are oriented to run the same way around the axis, so
    the reported value is the angle swept from one family to the other and
    ranges over (0, 180) degrees.
    """
    base = villarceau_circles(spec, 0.0, 1)[0]
    angles, merid = [], []
    for k in range(configurations):
        rot = 2.0 * np.pi * (k + 0.5) / configurations
        for other in villarceau_circles(spec, rot, -1):
            for pt in _circle_circle_intersections(base, other):
                t1 = _torus_tangent_direction(spec, pt, _circle_tangent(base, pt))
                t2 = _torus_tangent_direction(spec, pt, _circle_tangent(other, pt))
                angles.append(_angle_deg(t1, t2))
                m = _meridian_tangent(spec, pt)
                merid.append(min(_angle_deg(t1, m), _angle_deg(t1, -m)))
    if not angles:
        raise DomainError("no intersections found between the Villarceau families")
    angles = np.array(angles)
    value = float(np.mean(angles))
    closed = villarceau_angle_closed_form(spec)
    if abs(value - closed) > check_tol * max(1.0, closed):
        raise DomainError(f"measured Villarceau angle {value!r} disagrees with closed form {closed!r}")
    return VillarceauAngle(value, float(np.ptp(angles)), float(np.mean(merid)), closed, len(angles))


def meridian_diagonal_angle(spec, theta=0.3):
    """Angle (degrees) between the meridian and the flat diagonal u = phi."""
    rho = spec.R + spec.r * np.cos(theta)
    dtheta_du = rho / spec.r
    e_theta = np.array([-spec.r * np.sin(theta), 0.0, spec.r * np.cos(theta)])
    e_phi = np.array([0.0, rho, 0.0])
    diag = dtheta_du * e_theta + e_phi
    return _angle_deg(diag, e_theta)


def diagonal_curve(spec, samples=256, offset=0.0, anti=False):
    """Points on the image of the flat line u = +-phi + offset."""
    # the line closes after one turn of phi only when mu = 1
    phis = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
    us = (-phis if anti else phis) + offset
    thetas = thetas_of_u(spec, us)
    return spec.point(thetas, phis)


def fit_circle(points):
    """Least-squares plane (SVD) and circle (algebraic fit in the plane).

    Returns (center, radius, normal, residual) with residual the max
    distance of the points to the fitted circle.
    """
    P = np.asarray(points, dtype=float)
    c0 = P.mean(axis=0)
    _, _, vt = np.linalg.svd(P - c0)
    e1, e2, n = vt
    xy = np.c_[(P - c0) @ e1, (P - c0) @ e2]
    A = np.c_[2.0 * xy, np.ones(len(xy))]
    b = np.sum(xy**2, axis=1)
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    cx, cy = sol[:2]
    radius = float(np.sqrt(sol[2] + cx * cx + cy * cy))
    center = c0 + cx * e1 + cy * e2
    off_plane = (P - center) @ n
    in_plane = P - np.outer(off_plane, n)
    radial = np.linalg.norm(in_plane - center, axis=1) - radius
    residual = float(np.max(np.hypot(off_plane, radial)))
    return center, radius, n, residual


def diagonal_is_villarceau_check(spec, samples=256, anti=False, offset=0.0):
    """Max distance of the mapped flat diagonal to its best-fit circle."""
    pts = diagonal_curve(spec, samples, offset=offset, anti=anti)
    center, radius, normal, residual = fit_circle(pts)
    return {"residual": residual, "radius": radius, "center": center.tolist(), "normal": normal.tolist()}


# tiling ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TiledTorus:
    mesh: TriangleMesh
    color: np.ndarray  # per mesh face
    tile: np.ndarray  # per mesh face, tiling-triangle id
    spec: TorusSpec
    n: int
    uv: np.ndarray  # per vertex (u, phi)


def tile_torus(spec, n=8, subdivisions=4, tol=1e-6):
    """Checkerboard of (2,4,4) triangles on a torus with square conformal grid.

    The flat 2 pi mu x 2 pi rectangle is cut into n x m squares (m = n mu),
    each square split by both diagonals into four right isoceles triangles.
    Each tiling triangle is subdivided into subdivisions^2 mesh faces.
    """
    mu = conformal_modulus(spec)
    m = n * mu
    if n < 2 or abs(m - round(m)) > tol * max(1.0, m) or round(m) < 2:
        raise DomainError(f"modulus {mu:.9g} is not commensurate with an {n}-column square grid")
    m = int(round(m))
    if n % 2 or m % 2:
        raise DomainError("grid counts must be even for a proper 2-colouring around the torus")
    k = int(subdivisions)
    # lattice in units of half a fine step: square side = 2k units
    N_phi, N_u = 2 * k * n, 2 * k * m
    step_phi = 2.0 * np.pi / N_phi
    step_u = 2.0 * np.pi * mu / N_u
    keys, verts_uv = {}, []

    def vid(a, b):
        a %= N_u
        b %= N_phi
        key = (a, b)
        if key not in keys:
            keys[key] = len(verts_uv)
            verts_uv.append((a * step_u, b * step_phi))
        return keys[key]

    faces, colors, tile_ids = [], [], []
    tile_id = 0
    for i in range(m):
        for j in range(n):
            a0, b0 = 2 * k * i, 2 * k * j
            ca, cb = a0 + k, b0 + k  # square centre in lattice units
            corners = [(a0, b0), (a0 + 2 * k, b0), (a0 + 2 * k, b0 + 2 * k), (a0, b0 + 2 * k)]
            for q in range(4):
                P0, P1 = corners[q], corners[(q + 1) % 4]
                col = (i + j + q) % 2
                # subdivide triangle (centre, P0, P1) into k^2 faces
                def lat(s, t):
                    # barycentric-style grid: s steps toward P0, t toward P1
                    return (ca + (s * (P0[0] - ca) + t * (P1[0] - ca)) // k,
                            cb + (s * (P0[1] - cb) + t * (P1[1] - cb)) // k)
                for s in range(k):
                    for t in range(k - s):
                        a, b, c = lat(s, t), lat(s + 1, t), lat(s, t + 1)
                        faces.append((vid(*a), vid(*b), vid(*c)))
                        colors.append(col)
                        tile_ids.append(tile_id)
                        if s + t < k - 1:
                            a, b, c = lat(s + 1, t), lat(s + 1, t + 1), lat(s, t + 1)
                            faces.append((vid(*a), vid(*b), vid(*c)))
                            colors.append(col)
                            tile_ids.append(tile_id)
                tile_id += 1
    uv = np.array(verts_uv)
    theta = thetas_of_u(spec, uv[:, 0])
    verts = spec.point(theta, uv[:, 1])
    mesh = TriangleMesh(verts, np.array(faces, dtype=np.int64))
    return TiledTorus(mesh, np.array(colors, dtype=np.int8), np.array(tile_ids), spec, n, uv)


def tiling_vertex_angle_sums(tiled):
    """Sum of tiling-triangle corner angles (degrees) at every tiling vertex.

    Corner angles are measured on the embedded surface between the tangent
    directions of the tiling edges, which are straight in (u, phi).
    """
    spec = tiled.spec
    mu = _modulus_closed(spec.R, spec.r)
    n = tiled.n
    m = int(round(n * mu))
    h = 2.0 * np.pi / n
    sums = {}
    cache = {}

    def tangent(u, ph, du, dph):
        if u not in cache:
            cache[u] = theta_of_u(spec, u)
        th = cache[u]
        rho = spec.R + spec.r * np.cos(th)
        e_th = np.array([-spec.r * np.sin(th) * np.cos(ph), -spec.r * np.sin(th) * np.sin(ph), spec.r * np.cos(th)])
        e_ph = np.array([-rho * np.sin(ph), rho * np.cos(ph), 0.0])
        return (rho / spec.r) * du * e_th + dph * e_ph

    for i in range(m):
        for j in range(n):
            u0, p0 = i * h, j * h
            ctr = (u0 + h / 2, p0 + h / 2)
            corners = [(u0, p0), (u0 + h, p0), (u0 + h, p0 + h), (u0, p0 + h)]
            for q in range(4):
                tri = [ctr, corners[q], corners[(q + 1) % 4]]
                for v in range(3):
                    a, b, c = tri[v], tri[(v + 1) % 3], tri[(v + 2) % 3]
                    t1 = tangent(a[0], a[1], b[0] - a[0], b[1] - a[1])
                    t2 = tangent(a[0], a[1], c[0] - a[0], c[1] - a[1])
                    key = (round((a[0] % (m * h)) / (h / 2)) % (2 * m), round((a[1] % (n * h)) / (h / 2)) % (2 * n))
                    sums[key] = sums.get(key, 0.0) + _angle_deg(t1, t2)
    return sums


def coordinate_net_angles(spec, samples=100, seed=0):
    """Angles (degrees) between u- and phi-curves at random surface points."""
    rng = np.random.default_rng(seed)
    out = []
    for th, ph in rng.uniform(0.0, 2.0 * np.pi, size=(samples, 2)):
        rho = spec.R + spec.r * np.cos(th)
        e_th = np.array([-spec.r * np.sin(th) * np.cos(ph), -spec.r * np.sin(th) * np.sin(ph), spec.r * np.cos(th)])
        e_ph = np.array([-rho * np.sin(ph), rho * np.cos(ph), 0.0])
        out.append(_angle_deg(e_th, e_ph))
    return np.array(out)


def torus_report(spec, include_angle=True):
    report = {"R": spec.R, "r": spec.r, "modulus": conformal_modulus(spec)}
    if include_angle:
        va = villarceau_angle(spec)
        report.update(va.to_dict())
    return report
