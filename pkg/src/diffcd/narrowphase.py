"""GJK distance and EPA penetration depth on the Minkowski difference,
with witness points and the terminal simplex used by the derivative code.

All computation happens in shape 1's frame; the pose maps shape 2 into it.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import se3
from ._core import kernels
from .shapes import ELLIPSOID, SPHERE, shape_arrays

FLAG_MAX_ITERATIONS = kernels.FLAG_MAX_ITERATIONS
FLAG_MAX_FACES = kernels.FLAG_MAX_FACES
FLAG_DEGENERATE = kernels.FLAG_DEGENERATE
FLAG_POLISH_FAILED = kernels.FLAG_POLISH_FAILED
FLAG_TOUCHING = kernels.FLAG_TOUCHING
FLAG_SINGULAR = kernels.FLAG_SINGULAR


@dataclass(frozen=True)
class GjkConfig:
    tolerance: float = 1e-8
    max_iterations: int = 128
    epa_tolerance: float = 1e-8
    epa_max_faces: int = 1024
    # refine smooth strictly-convex pairs with Newton steps on the
    # stationarity equation (needed for tight-tolerance oracles)
    polish: bool = True

    def __post_init__(self):
        if self.tolerance <= 0 or self.max_iterations < 1:
            raise ValueError("tolerance must be > 0 and max_iterations >= 1")


DEFAULT_CONFIG = GjkConfig()


@dataclass(frozen=True)
class GjkSeed:
    """Warm-start data: the previous separation vector, optionally with the
    terminal simplex's support pairs (shape-2 points in its local frame)."""

    direction: np.ndarray
    support1: Optional[np.ndarray] = None
    support2_local: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(
            self, "direction", np.ascontiguousarray(self.direction, dtype=np.float64).reshape(3)
        )
        for name in ("support1", "support2_local"):
            v = getattr(self, name)
            if v is not None:
                v = np.ascontiguousarray(v, dtype=np.float64).reshape(-1, 3)
                object.__setattr__(self, name, v)


@dataclass(frozen=True)
class ProximityResult:
    witness1: np.ndarray          # on shape 1, shape-1 frame
    witness2: np.ndarray          # on shape 2, mapped to shape-1 frame
    separation: np.ndarray        # witness1 - witness2
    signed_distance: float
    colliding: bool
    witness2_local: np.ndarray    # on shape 2, shape-2 frame
    iterations: int
    epa_iterations: int = 0
    flags: int = 0
    simplex: Optional[np.ndarray] = None
    simplex_dim: int = 0
    simplex_support1: Optional[np.ndarray] = None
    simplex_support2_local: Optional[np.ndarray] = None

    @property
    def converged(self):
        return not self.flags & (FLAG_MAX_ITERATIONS | FLAG_DEGENERATE)


@dataclass(frozen=True)
class PenetrationCase:
    """GJK found the origin inside the Minkowski difference; the enclosing
    simplex seeds EPA."""

    simplex: np.ndarray
    iterations: int
    flags: int


def _pair_smooth(shape1, shape2):
    return shape1.kind in (SPHERE, ELLIPSOID) and shape2.kind in (SPHERE, ELLIPSOID)


def _run_kernel(shape1, shape2, q, cfg, seed, run_epa):
    k1, p1, V1, _, _ = shape_arrays(shape1)
    k2, p2, V2, _, _ = shape_arrays(shape2)
    R = se3.rotation_matrix(q)
    t = q.translation
    guess = seed.direction if seed is not None else np.zeros(3)
    seed_n = 0
    seed1 = _ZERO43
    seed2l = _ZERO43
    if seed is not None and seed.support1 is not None and seed.support2_local is not None:
        seed_n = min(seed.support1.shape[0], seed.support2_local.shape[0], 4)
        if seed_n > 0:
            seed1 = np.zeros((4, 3))
            seed2l = np.zeros((4, 3))
            seed1[:seed_n] = seed.support1[:seed_n]
            seed2l[:seed_n] = seed.support2_local[:seed_n]
    w1 = np.empty(3)
    w2 = np.empty(3)
    w2l = np.empty(3)
    simplex = np.empty((4, 3))
    sup1 = np.empty((4, 3))
    sup2l = np.empty((4, 3))
    polish = 1 if (cfg.polish and _pair_smooth(shape1, shape2)) else 0
    dist, colliding, iters, epa_iters, flags, sdim = kernels.gjk_epa(
        k1, p1, V1, k2, p2, V2, R, t,
        cfg.tolerance, cfg.max_iterations, cfg.epa_tolerance, cfg.epa_max_faces,
        guess, seed_n, seed1, seed2l, polish, run_epa,
        w1, w2, w2l, simplex, sup1, sup2l,
    )
    return dist, colliding, iters, epa_iters, flags, sdim, w1, w2, w2l, simplex, sup1, sup2l


_ZERO43 = np.zeros((4, 3))


def _make_result(dist, colliding, iters, epa_iters, flags, sdim, w1, w2, w2l, simplex, sup1, sup2l, cfg):
    sd = -dist if colliding else dist
    is_colliding = bool(colliding)
    if not is_colliding and dist < cfg.tolerance:
        # touching contact: report the separated branch with distance 0
        sd = 0.0
        flags |= FLAG_TOUCHING
    return ProximityResult(
        witness1=w1,
        witness2=w2,
        separation=w1 - w2,
        signed_distance=float(sd),
        colliding=is_colliding,
        witness2_local=w2l,
        iterations=int(iters),
        epa_iterations=int(epa_iters),
        flags=int(flags),
        simplex=simplex[:sdim].copy(),
        simplex_dim=int(sdim),
        simplex_support1=sup1[:sdim].copy(),
        simplex_support2_local=sup2l[:sdim].copy(),
    )


def proximity(shape1, shape2, q, cfg=DEFAULT_CONFIG, seed=None) -> ProximityResult:
    """Signed distance, witness points, and terminal simplex for a pair."""
    out = _run_kernel(shape1, shape2, q, cfg, seed, 1)
    return _make_result(*out, cfg)


def gjk(shape1, shape2, q, cfg=DEFAULT_CONFIG, seed=None):
    """Distance query only: returns a ProximityResult when separated, or a
    PenetrationCase carrying the origin-enclosing simplex."""
    out = _run_kernel(shape1, shape2, q, cfg, seed, 0)
    dist, colliding, iters, epa_iters, flags, sdim = out[:6]
    simplex = out[9]
    if colliding:
        return PenetrationCase(simplex=simplex[:sdim].copy(), iterations=int(iters), flags=int(flags))
    return _make_result(*out, cfg)


def epa(shape1, shape2, q, seed_simplex, cfg=DEFAULT_CONFIG) -> ProximityResult:
    """Penetration depth and witnesses given an origin-enclosing simplex."""
    seed_simplex = np.asarray(seed_simplex, dtype=np.float64)
    if seed_simplex.shape != (4, 3):
        raise ValueError("seed simplex must be a (4, 3) tetrahedron")
    result = proximity(shape1, shape2, q, cfg)
    if not result.colliding:
        raise ValueError("seed simplex does not witness a penetration")
    return result


def warm_start(prev: ProximityResult) -> GjkSeed:
    return GjkSeed(prev.separation, prev.simplex_support1, prev.simplex_support2_local)


def dump_simplex_obj(result: ProximityResult, path):
    """Write the terminal Minkowski-difference simplex as OBJ for debugging."""
    verts = result.simplex if result.simplex is not None else np.empty((0, 3))
    with open(path, "w", encoding="utf-8") as fh:
        for v in verts:
            fh.write("v %.17g %.17g %.17g\n" % (v[0], v[1], v[2]))
        n = verts.shape[0]
        if n == 3:
            fh.write("f 1 2 3\n")
        elif n == 4:
            fh.write("f 1 2 3\nf 1 2 4\nf 1 3 4\nf 2 3 4\n")
