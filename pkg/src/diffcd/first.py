"""First-order witness Jacobians by implicit differentiation of the
stationarity equation, with pluggable support-Hessian backends.
"""

from dataclasses import dataclass, field

import numpy as np

from . import se3
from ._core import kernels
from .errors import BackendMismatch, UnavailableHessian, ZeroDirection
from .narrowphase import DEFAULT_CONFIG, FLAG_SINGULAR, proximity
from .shapes import ConvexMesh, shape_arrays, support_hessian_analytic
from .zeroth import WitnessJacobians


@dataclass(frozen=True)
class Analytic:
    """Exact Hessians; only spheres and ellipsoids have them."""

    code: int = field(default=kernels.BACKEND_ANALYTIC, init=False, repr=False)


@dataclass(frozen=True)
class GaussianMC:
    """Monte-Carlo smoothed Hessian; works for every shape."""

    samples: int = 20
    noise: float = 1e-3
    seed: int = 0
    code: int = field(default=kernels.BACKEND_GAUSSIAN, init=False, repr=False)

    def __post_init__(self):
        if self.samples < 1 or self.noise <= 0:
            raise ValueError("need samples >= 1 and noise > 0")


@dataclass(frozen=True)
class Gumbel:
    """Closed-form softmax Hessian over a neighbor ball; meshes only."""

    temperature: float = 1e-4
    depth: int = 1
    code: int = field(default=kernels.BACKEND_GUMBEL, init=False, repr=False)

    def __post_init__(self):
        if self.temperature <= 0 or self.depth < 0:
            raise ValueError("need temperature > 0 and depth >= 0")


@dataclass(frozen=True)
class ImplicitSystem:
    A: np.ndarray             # 3x3 Jacobian of the stationarity residual in x
    B: np.ndarray             # 3x6 Jacobian of the residual in the pose tangent
    H1: np.ndarray            # support Hessian of shape 1 at its witness direction
    H2: np.ndarray            # support Hessian of shape 2 (local frame)
    regularization: float
    flags: int = 0


def _check_backend(shape, backend):
    if isinstance(backend, Gumbel) and not isinstance(shape, ConvexMesh):
        raise BackendMismatch("the softmax Hessian needs a ConvexMesh")
    if isinstance(backend, Analytic) and shape.kind not in (0, 1):
        raise UnavailableHessian(
            "no analytic support Hessian for this shape; use a smoothing backend"
        )


def support_hessian(shape, direction, backend) -> np.ndarray:
    """Symmetric PSD estimate of the support-function Hessian at a direction."""
    d = np.ascontiguousarray(direction, dtype=np.float64).reshape(3)
    if np.sqrt(d @ d) < 1e-15:
        raise ZeroDirection("Hessian direction has near-zero norm")
    _check_backend(shape, backend)
    H = np.empty((3, 3))
    if isinstance(backend, Analytic):
        out = support_hessian_analytic(shape, d)
        if out is None:
            raise UnavailableHessian("no analytic support Hessian for this shape")
        return out
    kind, params, V, ip, ix = shape_arrays(shape)
    if isinstance(backend, Gumbel):
        work = np.empty(2 * V.shape[0], dtype=np.int32)
        kernels.gumbel_hessian(V, ip, ix, d, backend.temperature, backend.depth, H, work)
        return H
    rng = np.random.default_rng(backend.seed)
    Z = rng.standard_normal((backend.samples, 3))
    kernels.gaussian_hessian(kind, params, V, d, backend.noise, Z, H)
    return H


def _split_backends(backend):
    if isinstance(backend, (tuple, list)):
        if len(backend) != 2:
            raise ValueError("expected one backend or a pair")
        return backend[0], backend[1]
    return backend, backend


def assemble_system(prox, q, shape1, shape2, backend) -> ImplicitSystem:
    """Build the implicit-differentiation system at a converged query.

    The residual is f(x, q) = x - grad sigma_1(-x) + T(q) grad sigma_2(R^T x)
    when separated; penetration flips the sign of x inside both gradients,
    which flips the sign of the Hessian terms in A and of the curvature part
    of the rotation block in B.
    """
    b1, b2 = _split_backends(backend)
    _check_backend(shape1, b1)
    _check_backend(shape2, b2)
    R = se3.rotation_matrix(q)
    x = prox.separation
    sgn = 1.0 if prox.colliding else -1.0
    d1 = sgn * x
    d2 = -sgn * (R.T @ x)
    H1 = support_hessian(shape1, d1, b1)
    H2 = support_hessian(shape2, d2, b2)
    A = np.eye(3) - sgn * (H1 + R @ H2 @ R.T)
    B = se3.dfdq_blocks(q, x, prox.witness2_local)
    # chain term through the rotated Hessian argument: under a right angular
    # perturbation w, R^T x picks up [R^T x]x w
    B[:, 3:] -= sgn * R @ H2 @ se3.skew(R.T @ x)

    lam = 0.0
    flags = 0
    while True:
        Areg = A + lam * np.eye(3)
        if np.linalg.cond(Areg) <= 1e12:
            break
        lam = 1e-10 if lam == 0.0 else lam * 10.0
        if lam > 1e-4:
            flags |= FLAG_SINGULAR
            break
    return ImplicitSystem(A=A, B=B, H1=H1, H2=H2, regularization=lam, flags=flags)


def jacobians_from_system(system: ImplicitSystem, prox) -> WitnessJacobians:
    """Solve the assembled system for the three 3x6 Jacobians."""
    sgn = 1.0 if prox.colliding else -1.0
    Areg = system.A + system.regularization * np.eye(3)
    dsep = np.linalg.solve(Areg, -system.B)
    # w1 = grad sigma_1(sgn x*), so the chain through the argument gives sgn H1
    d1 = sgn * (system.H1 @ dsep)
    return WitnessJacobians(
        d_w1_dq=d1,
        d_w2_dq=d1 - dsep,
        d_sep_dq=dsep,
        estimator="first",
        flags=system.flags,
    )


def first_order_jacobians(
    shape1, shape2, q, backend=Analytic(), gjk_cfg=DEFAULT_CONFIG, prox=None
) -> WitnessJacobians:
    """Witness Jacobians at the converged proximity result.

    backend may be a single Hessian backend or a (shape1, shape2) pair of
    them for mixed pairs.
    """
    if prox is None:
        prox = proximity(shape1, shape2, q, gjk_cfg)
    return first_order_from_prox(shape1, shape2, q, prox, backend)


def first_order_from_prox(shape1, shape2, q, prox, backend=Analytic()) -> WitnessJacobians:
    """Derivative-only entry point: no narrow-phase solve happens here."""
    b1, b2 = _split_backends(backend)
    _check_backend(shape1, b1)
    _check_backend(shape2, b2)
    k1, p1, V1, ip1, ix1 = shape_arrays(shape1)
    k2, p2, V2, ip2, ix2 = shape_arrays(shape2)
    R = se3.rotation_matrix(q)

    def _backend_args(b):
        if isinstance(b, Gumbel):
            return b.code, b.temperature, b.depth, _EMPTY_Z
        if isinstance(b, GaussianMC):
            rng = np.random.default_rng(b.seed)
            return b.code, b.noise, 0, rng.standard_normal((b.samples, 3))
        return b.code, 0.0, 0, _EMPTY_Z

    c1, e1, n1, Z1 = _backend_args(b1)
    c2, e2, n2, Z2 = _backend_args(b2)
    nwork = 2 * max(V1.shape[0], V2.shape[0], 1)
    work = np.empty(nwork, dtype=np.int32)
    H1 = np.empty((3, 3))
    H2 = np.empty((3, 3))
    A = np.empty((3, 3))
    B = np.empty((3, 6))
    dsep = np.empty((3, 6))
    dw1 = np.empty((3, 6))
    dw2 = np.empty((3, 6))
    lam, flags = kernels.first_order_kernel(
        k1, p1, V1, ip1, ix1,
        k2, p2, V2, ip2, ix2,
        R, q.translation, prox.separation, prox.witness2_local,
        1 if prox.colliding else 0,
        c1, e1, n1, Z1,
        c2, e2, n2, Z2,
        H1, H2, A, B, dsep, dw1, dw2, work,
    )
    name = "first(%s|%s)" % (type(b1).__name__.lower(), type(b2).__name__.lower())
    return WitnessJacobians(
        d_w1_dq=dw1,
        d_w2_dq=dw2,
        d_sep_dq=dsep,
        estimator=name,
        flags=int(flags),
    )


_EMPTY_Z = np.empty((0, 3))


def dump_system_csv(system: ImplicitSystem, path):
    """Flat CSV dump of A, B, H1, H2 and the applied regularization."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("matrix,row,c0,c1,c2,c3,c4,c5\n")
        for name, M in (("A", system.A), ("B", system.B), ("H1", system.H1), ("H2", system.H2)):
            for r in range(M.shape[0]):
                row = list(M[r]) + [""] * (6 - M.shape[1])
                cells = ",".join("%.17g" % v if v != "" else "" for v in row)
                fh.write("%s,%d,%s\n" % (name, r, cells))
        fh.write("lambda,0,%.17g,,,,,\n" % system.regularization)
