"""Exception hierarchy.

Every failure that stems from the inputs or from a numerical method not
converging derives from :class:`DomainError`; the CLI maps those to exit
code 1.
"""


class DomainError(ValueError):
    """Invalid input or a numerical procedure that cannot produce a result."""


class ProjectionError(DomainError):
    """Newton projection onto a contour surface failed.

    ``last`` holds the final iterate.
    """

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class MeshTopologyError(DomainError):
    """A mesh does not have the topology an operation requires."""


class TriangleInequalityError(DomainError):
    def __init__(self, message, lengths=None):
        super().__init__(message)
        self.lengths = lengths


class ConvergenceError(DomainError):
    """An iterative solver stopped without meeting its tolerance."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history or []


class SearchError(DomainError):
    pass
