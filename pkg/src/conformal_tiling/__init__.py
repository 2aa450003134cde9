"""Conformally correct tilings of the Chmutov genus-5 surface, tori and
triangle-group tilings."""

from .errors import (
    ConvergenceError,
    DomainError,
    MeshTopologyError,
    ProjectionError,
    SearchError,
    TriangleInequalityError,
)

__all__ = [
    "ConvergenceError",
    "DomainError",
    "MeshTopologyError",
    "ProjectionError",
    "SearchError",
    "TriangleInequalityError",
]
