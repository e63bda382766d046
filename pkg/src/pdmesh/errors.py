"""Exception types raised across the package."""


class PdmeshError(Exception):
    """Base class for all package errors."""


class DegenerateEdge(PdmeshError):
    """Edge endpoints are (numerically) coincident."""


class DegenerateFace(PdmeshError):
    """Triangle vertices are (numerically) collinear."""


class DegenerateCell(PdmeshError):
    """Dual cell has non-positive area."""


class GeometryError(PdmeshError):
    """Invalid input geometry (open loops, crossing segments, ...)."""


class OutOfDomain(PdmeshError):
    """Query point outside the region covered by a raster field."""


class Antipodal(PdmeshError):
    """Stereographic projection queried at the antipode of its centre."""


class NoConvergence(PdmeshError):
    """Iterative procedure exhausted its iteration budget."""


class InvalidFlip(PdmeshError):
    """Edge flip rejected: boundary, constrained, or would invert."""


class EmptyStar(PdmeshError):
    """Vertex has no incident triangles."""


class NonTermination(PdmeshError):
    """Flip cascade exceeded its budget; indicates a tolerance or logic bug."""


class MeshFormatError(PdmeshError):
    """Malformed mesh / geometry / raster file."""

    def __init__(self, path, lineno, message):
        self.path = path
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")
