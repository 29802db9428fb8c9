"""Exception types and result flags shared across the package.

Numerical operations prefer to return best estimates tagged with flags;
exceptions are raised for contract violations (bad geometry, missing
capabilities, invalid input) and, in strict mode, for non-convergence.
"""


class FieldlabError(Exception):
    """Base class for all package-specific errors."""


class CurlUnavailable(FieldlabError):
    """Source provides no analytic curl and no finite-difference step was given."""


class QuadratureNotConverged(FieldlabError):
    """Volume quadrature refinement hit its cap before meeting tolerance.

    Carries the best estimate so callers can inspect it.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class MeshTooCoarse(FieldlabError):
    """Two surface-mesh refinement levels disagree beyond tolerance."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class GeometryViolation(FieldlabError):
    """Observation point or boundary placement breaks an operation's geometry."""


class NonPositiveSample(FieldlabError):
    """Power-law fit input contains a non-positive sample value."""


class ParseError(FieldlabError):
    """Scenario document could not be parsed at all."""


class ValidationError(FieldlabError):
    """Scenario parsed but failed field-level validation.

    ``errors`` is a list of human-readable messages with line references.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


# Flag strings attached to numerical results.  Kept short and stable: they
# flow into the CSV ``flags`` column.
FLAG_QUAD_NOT_CONVERGED = "quad_not_converged"
FLAG_MESH_NOT_CONVERGED = "mesh_not_converged"
FLAG_BEAM_UNDERRESOLVED = "beam_underresolved"
FLAG_FD_CURL = "fd_curl"
