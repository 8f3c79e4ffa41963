"""Error taxonomy for the collision/derivative engine.

Solver-side soft failures (non-convergence, face budget exhaustion,
ill-conditioned systems) are reported as flags on result objects, not raised;
the exceptions here cover misuse of the API and unrecoverable input problems.
"""


class DiffcdError(Exception):
    """Base class for every engine error."""


class ZeroDirection(DiffcdError):
    """A support or Hessian query received a (near-)zero direction."""


class DegenerateInput(DiffcdError):
    """Geometry construction got collinear/coplanar/duplicate input."""


class IndexOutOfRange(DiffcdError):
    """A vertex index does not exist in the mesh."""


class BackendMismatch(DiffcdError):
    """A Hessian backend was used with a shape it does not support."""


class UnavailableHessian(DiffcdError):
    """The shape has no analytic support Hessian (piecewise-linear surface)."""


class SingularSystem(DiffcdError):
    """The implicit linear system stayed singular after regularization."""


class SampleFailure(DiffcdError):
    """Too many perturbed solves failed for a sampling estimator."""


class ParseError(DiffcdError):
    """A shape spec, pose string, or config value could not be parsed."""
