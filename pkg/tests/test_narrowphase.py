import os

import numpy as np
import pytest

from diffcd import narrowphase, se3
from diffcd.narrowphase import (
    DEFAULT_CONFIG,
    FLAG_TOUCHING,
    GjkConfig,
    GjkSeed,
    PenetrationCase,
    ProximityResult,
    dump_simplex_obj,
    epa,
    gjk,
    proximity,
    warm_start,
)
from diffcd.shapes import Box, Capsule, Ellipsoid, Sphere, support

from conftest import cube_mesh, random_mesh, random_pose, separated_pose


def _pose(t, quat=(0, 0, 0, 1)):
    return se3.Pose(np.asarray(t, dtype=float), np.asarray(quat, dtype=float))


def test_sphere_pair_along_axis():
    res = proximity(Sphere(1.0), Sphere(1.0), _pose([3.0, 0, 0]))
    assert res.signed_distance == pytest.approx(1.0, abs=1e-10)
    assert not res.colliding
    assert np.allclose(res.witness1, [1.0, 0, 0], atol=1e-10)
    assert np.allclose(res.witness2, [2.0, 0, 0], atol=1e-10)
    assert np.allclose(res.separation, res.witness1 - res.witness2, atol=0)
    assert np.allclose(res.witness2_local, [-1.0, 0, 0], atol=1e-10)


def test_sphere_pair_closed_form(rng):
    # separated spheres have an exact answer in any configuration
    r1, r2 = 0.7, 1.2
    for _ in range(30):
        q = random_pose(rng, translation_scale=5.0)
        c = np.linalg.norm(q.translation)
        if c <= r1 + r2 + 1e-3:
            continue
        res = proximity(Sphere(r1), Sphere(r2), q)
        assert res.signed_distance == pytest.approx(c - r1 - r2, abs=1e-10)
        u = q.translation / c
        assert np.allclose(res.witness1, r1 * u, atol=1e-10)
        assert np.allclose(res.witness2, q.translation - r2 * u, atol=1e-10)


def test_sphere_ellipsoid_polish_accuracy(rng):
    # Newton polish: stationarity residual at machine precision
    e = Ellipsoid(np.array([0.5, 1.0, 2.0]))
    s = Sphere(0.8)
    for _ in range(10):
        q = separated_pose(rng, distance=4.0)
        res = proximity(s, e, q)
        if res.colliding:
            continue
        d = res.separation / np.linalg.norm(res.separation)
        # witness1 is the support of shape 1 along -(-d) = d... the
        # separation points from witness2 toward witness1 for separated pairs
        sup1 = support(s, -d).point
        assert np.linalg.norm(res.witness1 - sup1) <= 1e-9


def test_frank_wolfe_gap_certificate(rng):
    # for any direction d, h_A(-d) + h_B(d-frame) bounds the distance from below
    m1 = random_mesh(4, n_vertices=16)
    m2 = random_mesh(5, n_vertices=16)
    for _ in range(20):
        q = separated_pose(rng, distance=6.0)
        res = proximity(m1, m2, q)
        if res.colliding or res.signed_distance <= 0:
            continue
        d = res.separation
        nd = np.linalg.norm(d)
        # support gap along the terminal direction certifies optimality
        s1 = support(m1, -d).point
        R = se3.rotation_matrix(q)
        s2 = R @ support(m2, R.T @ d).point + q.translation
        lower = float(d @ (s1 - s2)) / nd
        assert res.signed_distance <= lower + 1e-6
        assert res.signed_distance >= lower - 1e-6


def test_translation_equivariance(rng):
    m1 = random_mesh(6)
    m2 = random_mesh(7)
    q = separated_pose(rng, distance=5.0)
    res = proximity(m1, m2, q)
    # translating shape 2 along the separation normal changes sd linearly
    n = res.separation / np.linalg.norm(res.separation)
    for step in (0.1, 0.5):
        q2 = se3.Pose(q.translation - step * n, q.quaternion)
        res2 = proximity(m1, m2, q2)
        assert res2.signed_distance == pytest.approx(res.signed_distance + step, abs=1e-8)


def test_pair_swap_symmetry(rng):
    m1 = random_mesh(8)
    m2 = random_mesh(9)
    for _ in range(10):
        q = random_pose(rng, translation_scale=3.0)
        a = proximity(m1, m2, q)
        b = proximity(m2, m1, se3.inverse(q))
        assert a.signed_distance == pytest.approx(b.signed_distance, abs=1e-8)
        # witnesses swap roles and move to the other frame
        assert np.allclose(se3.apply(q, b.witness2), a.witness1, atol=1e-6)


def test_touching_contact():
    res = proximity(Sphere(1.0), Sphere(1.0), _pose([2.0 + 1e-9, 0, 0]))
    assert abs(res.signed_distance) <= 1e-6
    assert res.flags & FLAG_TOUCHING
    assert not res.colliding


def test_epa_sphere_penetration():
    res = proximity(Sphere(1.0), Sphere(1.0), _pose([1.0, 0, 0]))
    assert res.colliding
    assert res.signed_distance == pytest.approx(-1.0, abs=1e-6)
    assert np.allclose(res.witness1, [1.0, 0, 0], atol=1e-6)
    assert np.allclose(res.witness2, [0.0, 0, 0], atol=1e-6)


def test_epa_box_penetration():
    res = proximity(Box(np.ones(3)), Box(np.ones(3)), _pose([1.5, 0, 0]))
    assert res.colliding
    assert res.signed_distance == pytest.approx(-0.5, abs=1e-8)
    sep = res.witness1 - res.witness2
    assert np.allclose(np.abs(sep), [0.5, 0, 0], atol=1e-8)


def test_deep_penetration_depth_monotone():
    prev = 0.0
    for gap in (1.8, 1.5, 1.0, 0.5):
        res = proximity(Sphere(1.0), Sphere(1.0), _pose([gap, 0, 0]))
        assert res.colliding
        assert res.signed_distance < prev
        prev = res.signed_distance


def test_gjk_returns_penetration_case():
    out = gjk(Sphere(1.0), Sphere(1.0), _pose([1.0, 0, 0]))
    assert isinstance(out, PenetrationCase)
    assert out.simplex.shape == (4, 3)
    out2 = gjk(Sphere(1.0), Sphere(1.0), _pose([3.0, 0, 0]))
    assert isinstance(out2, ProximityResult)


def test_epa_entrypoint_and_seed_validation():
    case = gjk(Sphere(1.0), Sphere(1.0), _pose([1.0, 0, 0]))
    res = epa(Sphere(1.0), Sphere(1.0), _pose([1.0, 0, 0]), case.simplex)
    assert res.signed_distance == pytest.approx(-1.0, abs=1e-6)
    with pytest.raises(ValueError):
        epa(Sphere(1.0), Sphere(1.0), _pose([1.0, 0, 0]), np.zeros((3, 3)))
    with pytest.raises(ValueError):
        epa(Sphere(1.0), Sphere(1.0), _pose([5.0, 0, 0]), np.zeros((4, 3)))


def test_warm_start_cuts_iterations(rng):
    m1 = random_mesh(10, n_vertices=40)
    m2 = random_mesh(11, n_vertices=40)
    q = separated_pose(rng, distance=6.0)
    cold = proximity(m1, m2, q)
    warm = proximity(m1, m2, q, seed=warm_start(cold))
    assert warm.iterations <= 2
    assert warm.signed_distance == pytest.approx(cold.signed_distance, abs=1e-9)
    assert np.allclose(warm.witness1, cold.witness1, atol=1e-9)
    assert np.allclose(warm.witness2, cold.witness2, atol=1e-9)


def test_warm_start_nearby_pose(rng):
    m1 = random_mesh(12, n_vertices=40)
    m2 = random_mesh(13, n_vertices=40)
    q = separated_pose(rng, distance=6.0)
    base = proximity(m1, m2, q)
    q2 = se3.perturb(q, se3.Tangent(1e-3 * rng.standard_normal(3), 1e-3 * rng.standard_normal(3)))
    warm = proximity(m1, m2, q2, seed=warm_start(base))
    cold = proximity(m1, m2, q2)
    assert warm.signed_distance == pytest.approx(cold.signed_distance, abs=1e-9)
    assert warm.iterations <= cold.iterations


def test_simplex_is_reported(rng):
    q = separated_pose(rng, distance=5.0)
    res = proximity(random_mesh(1), random_mesh(2), q)
    assert res.simplex is not None
    assert res.simplex.shape == (res.simplex_dim, 3)
    assert 1 <= res.simplex_dim <= 4


def test_dump_simplex_obj(tmp_path, rng):
    q = separated_pose(rng, distance=5.0)
    res = proximity(random_mesh(1), random_mesh(2), q)
    path = tmp_path / "simplex.obj"
    dump_simplex_obj(res, path)
    lines = path.read_text().splitlines()
    vlines = [l for l in lines if l.startswith("v ")]
    assert len(vlines) == res.simplex_dim


def test_gjk_config_defaults_and_validation():
    cfg = GjkConfig()
    assert cfg.tolerance == 1e-8
    assert cfg.max_iterations == 128
    assert cfg.epa_tolerance == 1e-8
    assert cfg.epa_max_faces == 1024
    assert cfg.polish
    with pytest.raises(ValueError):
        GjkConfig(tolerance=0.0)
    with pytest.raises(ValueError):
        GjkConfig(max_iterations=0)


def test_capsule_against_sphere():
    # capsule along z with half length 1 and radius 0.5; sphere 3 up the axis
    res = proximity(Capsule(1.0, 0.5), Sphere(0.5), _pose([0, 0, 3.0]))
    assert res.signed_distance == pytest.approx(1.0, abs=1e-8)
    assert np.allclose(res.witness1, [0, 0, 1.5], atol=1e-8)


def test_mesh_pair_matches_qp_oracle(rng):
    cvxopt = pytest.importorskip("cvxopt")
    from cvxopt import matrix, solvers

    solvers.options["show_progress"] = False
    m1 = random_mesh(20, n_vertices=14)
    m2 = random_mesh(21, n_vertices=14)
    for _ in range(10):
        q = separated_pose(rng, distance=6.0)
        res = proximity(m1, m2, q)
        if res.colliding:
            continue
        V1 = m1.vertices
        V2 = m2.vertices @ se3.rotation_matrix(q).T + q.translation
        n1, n2 = V1.shape[0], V2.shape[0]
        # min ||V1^T a - V2^T b||^2 over two unit simplices
        D = np.hstack([V1.T, -V2.T])
        P = matrix(2.0 * (D.T @ D) + 1e-12 * np.eye(n1 + n2))
        qv = matrix(np.zeros(n1 + n2))
        G = matrix(-np.eye(n1 + n2))
        h = matrix(np.zeros(n1 + n2))
        A = np.zeros((2, n1 + n2))
        A[0, :n1] = 1.0
        A[1, n1:] = 1.0
        sol = solvers.qp(P, qv, G, h, matrix(A), matrix(np.ones(2)))
        x = np.array(sol["x"]).ravel()
        dist_qp = np.linalg.norm(D @ x)
        assert res.signed_distance == pytest.approx(dist_qp, abs=1e-5)
