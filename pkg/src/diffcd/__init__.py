"""Convex collision detection with derivatives of the witness points and
separation vector with respect to the relative pose.
"""

from ._core import COMPILED
from .errors import (
    BackendMismatch,
    DegenerateInput,
    DiffcdError,
    IndexOutOfRange,
    ParseError,
    SampleFailure,
    SingularSystem,
    UnavailableHessian,
    ZeroDirection,
)
from .first import (
    Analytic,
    GaussianMC,
    Gumbel,
    ImplicitSystem,
    assemble_system,
    first_order_from_prox,
    first_order_jacobians,
    support_hessian,
)
from .meshio import load_obj, save_obj
from .narrowphase import (
    GjkConfig,
    GjkSeed,
    PenetrationCase,
    ProximityResult,
    epa,
    gjk,
    proximity,
    warm_start,
)
from .se3 import Pose, Tangent, compose, dfdq_blocks, exp, inverse, log, perturb
from .shapes import (
    Box,
    Capsule,
    ConvexMesh,
    Ellipsoid,
    Sphere,
    SupportResult,
    build_convex_mesh,
    neighbors_to_depth,
    support,
    support_hessian_analytic,
)
from .zeroth import (
    SmoothingConfig,
    WitnessJacobians,
    finite_difference_jacobians,
    smoothed_witness_cloud,
    zeroth_order_jacobians,
)

__version__ = "0.1.0"
