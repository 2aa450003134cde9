"""Bisection for the contour value whose flattened quad is "just right".

For each c the patch is meshed, flattened with 60/60/90/90 corners and the
mismatch top - (left + right) measured. The mismatch is negative for fat
contours near c = -0.5 and positive near c = 0; its sign change is c*.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import logging

from .discrete_conformal import flatten, mismatch, side_lengths
from .errors import DomainError, SearchError
from .patch_mesher import DEFAULT_EDGE_LENGTH, mesh_patch

log = logging.getLogger(__name__)

DEFAULT_BRACKET = (-0.5, 0.0)
DEFAULT_C_TOL = 5e-4


@dataclass(frozen=True)
class Evaluation:
    c: float
    mismatch: float
    sides: dict
    n_faces: int
    iterations: int
    residual: float
    area: float

    def to_dict(self):
        return {
            "c": self.c, "mismatch": self.mismatch, "sides": dict(self.sides),
            "n_faces": self.n_faces, "iterations": self.iterations,
            "residual": self.residual, "area": self.area,
        }


def evaluate_mismatch(c, resolution=DEFAULT_EDGE_LENGTH, tol=1e-10):
    """mesh_patch -> flatten -> side_lengths -> mismatch at a single c."""
    try:
        patch = mesh_patch(c, resolution)
        flat = flatten(patch, tol=tol, with_layout=False)
    except Exception as exc:
        raise SearchError(f"evaluation at c={c} failed: {exc}") from exc
    sides = side_lengths(patch, flat)
    return Evaluation(
        float(c), float(mismatch(sides)), sides.to_dict(), patch.mesh.n_faces,
        flat.iterations, flat.residual, flat.total_area(),
    )


@dataclass(frozen=True)
class SearchReport:
    c_star: float
    bracket_history: tuple  # (c_low, c_high, m_low, m_high) per iteration
    evaluations: tuple
    resolution: float
    c_tol: float
    flatten_calls: int
    half_width: float = field(default=0.0)

    def to_dict(self):
        return {
            "c_star": self.c_star,
            "c_tol": self.c_tol,
            "half_width": self.half_width,
            "resolution": self.resolution,
            "flatten_calls": self.flatten_calls,
            "bracket_history": [list(b) for b in self.bracket_history],
            "evaluations": [e.to_dict() for e in self.evaluations],
        }


def solve_cstar(bracket=DEFAULT_BRACKET, c_tol=DEFAULT_C_TOL, resolution=DEFAULT_EDGE_LENGTH, tol=1e-10):
    """Midpoint bisection on the sign of the mismatch.

    Stops once the bracket half-width is at most ``c_tol`` and returns its
    midpoint, so the returned value is within c_tol of the sign change.
    """
    lo, hi = (float(x) for x in bracket)
    if not (-1.0 < lo < hi < 1.0):
        raise DomainError(f"bracket {bracket} must satisfy -1 < lo < hi < 1")
    if c_tol <= 0:
        raise DomainError("c_tol must be positive")
    ev_lo = evaluate_mismatch(lo, resolution, tol)
    ev_hi = evaluate_mismatch(hi, resolution, tol)
    evals = [ev_lo, ev_hi]
    if not (ev_lo.mismatch < 0.0 < ev_hi.mismatch):
        raise SearchError(
            f"mismatch does not change sign on the bracket: m({lo})={ev_lo.mismatch:.6g}, "
            f"m({hi})={ev_hi.mismatch:.6g}"
        )
    m_lo, m_hi = ev_lo.mismatch, ev_hi.mismatch
    history = [(lo, hi, m_lo, m_hi)]
    while 0.5 * (hi - lo) > c_tol:
        mid = 0.5 * (lo + hi)
        ev = evaluate_mismatch(mid, resolution, tol)
        evals.append(ev)
        log.info("c=%.6f mismatch=%+.6e", mid, ev.mismatch)
        if ev.mismatch == 0.0:
            lo = hi = mid
            m_lo = m_hi = 0.0
        elif ev.mismatch < 0.0:
            lo, m_lo = mid, ev.mismatch
        else:
            hi, m_hi = mid, ev.mismatch
        history.append((lo, hi, m_lo, m_hi))
    return SearchReport(
        c_star=0.5 * (lo + hi),
        bracket_history=tuple(history),
        evaluations=tuple(evals),
        resolution=float(resolution),
        c_tol=float(c_tol),
        flatten_calls=len(evals),
        half_width=0.5 * (hi - lo),
    )


def _curve_point(args):
    c, resolution = args
    try:
        return {"c": float(c), "mismatch": evaluate_mismatch(c, resolution).mismatch}
    except Exception as exc:
        return {"c": float(c), "mismatch": None, "error": f"{type(exc).__name__}: {exc}"}


def mismatch_curve(cs, resolution=DEFAULT_EDGE_LENGTH, workers=None):
    """Mismatch at each c. Failures are recorded per point, not raised."""
    jobs = [(float(c), resolution) for c in cs]
    if not jobs:
        return []
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_curve_point, jobs))
    return [_curve_point(j) for j in jobs]
