"""Sampling-based witness Jacobians: the randomized-smoothing estimator and
the central finite-difference baseline, both treating the narrow phase as a
black box.
"""

from dataclasses import dataclass

import numpy as np

from . import se3
from ._core import kernels
from .narrowphase import DEFAULT_CONFIG, proximity
from .shapes import shape_arrays

FLAG_SAMPLE_FAILURE = 64


@dataclass(frozen=True)
class SmoothingConfig:
    samples: int = 50
    noise: float = 1e-2
    seed: int = 0
    # subtract the unperturbed witness from each sample; expectation is
    # unchanged (the score has zero mean) but variance drops sharply
    control_variate: bool = True

    def __post_init__(self):
        if self.samples < 1 or self.noise <= 0:
            raise ValueError("need samples >= 1 and noise > 0")


@dataclass(frozen=True)
class WitnessJacobians:
    d_w1_dq: np.ndarray
    d_w2_dq: np.ndarray
    d_sep_dq: np.ndarray
    estimator: str = ""
    samples_requested: int = 0
    samples_used: int = 0
    noise: float = 0.0
    flags: int = 0


def _perturbed_frames(q, Z, noise):
    """Rotation matrices and translations of perturb(q, noise * z) rows."""
    trans, quat = se3.exp_many(noise * Z)
    return se3.compose_many(q, trans, quat)


def _solve_batch(shape1, shape2, Rs, ts, guess, cfg):
    """Narrow-phase solves over a batch of pose frames, warm started."""
    k1, p1, V1, _, _ = shape_arrays(shape1)
    k2, p2, V2, _, _ = shape_arrays(shape2)
    m = Rs.shape[0]
    W1 = np.empty((m, 3))
    W2 = np.empty((m, 3))
    ok = np.ones(m, dtype=bool)
    w1 = np.empty(3)
    w2 = np.empty(3)
    w2l = np.empty(3)
    simplex = np.empty((4, 3))
    sup1 = np.empty((4, 3))
    sup2l = np.empty((4, 3))
    zero43 = np.zeros((4, 3))
    polish = 1 if (shape1.kind in (0, 1) and shape2.kind in (0, 1)) else 0
    for i in range(m):
        R = np.ascontiguousarray(Rs[i])
        t = np.ascontiguousarray(ts[i])
        dist, colliding, _, _, flags, _ = kernels.gjk_epa(
            k1, p1, V1, k2, p2, V2, R, t,
            cfg.tolerance, cfg.max_iterations, cfg.epa_tolerance, cfg.epa_max_faces,
            guess, 0, zero43, zero43, polish, 1,
            w1, w2, w2l, simplex, sup1, sup2l,
        )
        W1[i] = w1
        W2[i] = w2
        if flags & (kernels.FLAG_MAX_ITERATIONS | kernels.FLAG_DEGENERATE):
            ok[i] = False
    return W1, W2, ok


def zeroth_order_jacobians(
    shape1, shape2, q, cfg: SmoothingConfig = SmoothingConfig(), gjk_cfg=DEFAULT_CONFIG
) -> WitnessJacobians:
    """Score-function estimate of the smoothed witness Jacobians.

    Tangent perturbations z are standard normal, so the estimator column j
    averages witness(q * exp(eps z)) * z_j / eps over the samples; one shared
    z set drives both witnesses so their difference stays consistent.
    """
    base = proximity(shape1, shape2, q, gjk_cfg)
    rng = np.random.default_rng(cfg.seed)
    Z = rng.standard_normal((cfg.samples, 6))
    Rs, ts = _perturbed_frames(q, Z, cfg.noise)
    W1, W2, ok = _solve_batch(shape1, shape2, Rs, ts, base.separation.copy(), gjk_cfg)

    used = int(ok.sum())
    flags = 0
    if used < cfg.samples:
        if used <= cfg.samples // 2:
            flags |= FLAG_SAMPLE_FAILURE
        Z = Z[ok]
        W1 = W1[ok]
        W2 = W2[ok]
    if cfg.control_variate:
        W1 = W1 - base.witness1
        W2 = W2 - base.witness2
    scale = 1.0 / (cfg.noise * max(used, 1))
    d1 = scale * (W1.T @ Z)
    d2 = scale * (W2.T @ Z)
    return WitnessJacobians(
        d_w1_dq=d1,
        d_w2_dq=d2,
        d_sep_dq=d1 - d2,
        estimator="zeroth(M=%d,eps=%g)" % (cfg.samples, cfg.noise),
        samples_requested=cfg.samples,
        samples_used=used,
        noise=cfg.noise,
        flags=flags,
    )


def finite_difference_jacobians(
    shape1, shape2, q, increment=1e-6, gjk_cfg=DEFAULT_CONFIG
) -> WitnessJacobians:
    """Central differences along the 6 tangent basis directions (12 solves)."""
    if increment <= 0:
        raise ValueError("increment must be > 0")
    base = proximity(shape1, shape2, q, gjk_cfg)
    Z = np.vstack([np.eye(6), -np.eye(6)])
    Rs, ts = _perturbed_frames(q, Z, increment)
    W1, W2, ok = _solve_batch(shape1, shape2, Rs, ts, base.separation.copy(), gjk_cfg)
    d1 = (W1[:6] - W1[6:]).T / (2.0 * increment)
    d2 = (W2[:6] - W2[6:]).T / (2.0 * increment)
    flags = 0 if bool(ok.all()) else FLAG_SAMPLE_FAILURE
    return WitnessJacobians(
        d_w1_dq=d1,
        d_w2_dq=d2,
        d_sep_dq=d1 - d2,
        estimator="fd(h=%g)" % increment,
        samples_requested=12,
        samples_used=int(ok.sum()),
        noise=increment,
        flags=flags,
    )


def smoothed_witness_cloud(
    shape1, shape2, q, cfg: SmoothingConfig = SmoothingConfig(), gjk_cfg=DEFAULT_CONFIG
):
    """The perturbed witness pairs behind the estimator, for diagnostics."""
    rng = np.random.default_rng(cfg.seed)
    Z = rng.standard_normal((cfg.samples, 6))
    base = proximity(shape1, shape2, q, gjk_cfg)
    Rs, ts = _perturbed_frames(q, Z, cfg.noise)
    W1, W2, _ = _solve_batch(shape1, shape2, Rs, ts, base.separation.copy(), gjk_cfg)
    return [(W1[i].copy(), W2[i].copy()) for i in range(cfg.samples)]


def export_witness_cloud(pairs, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("sample_index,w1x,w1y,w1z,w2x,w2y,w2z\n")
        for i, (w1, w2) in enumerate(pairs):
            fh.write(
                "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n"
                % (i, w1[0], w1[1], w1[2], w2[0], w2[1], w2[2])
            )
