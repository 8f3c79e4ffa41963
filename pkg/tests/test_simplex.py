import numpy as np
import pytest

from diffcd._core import kernels


def _qp_closest(simplex):
    """Oracle: min ||S^T lam||^2 over the unit simplex, via cvxopt."""
    from cvxopt import matrix, solvers

    S = np.asarray(simplex, dtype=np.float64)
    n = S.shape[0]
    P = matrix(2.0 * (S @ S.T))
    q = matrix(np.zeros(n))
    G = matrix(-np.eye(n))
    h = matrix(np.zeros(n))
    A = matrix(np.ones((1, n)))
    b = matrix(np.ones(1))
    solvers.options["show_progress"] = False
    sol = solvers.qp(P, q, G, h, A, b)
    return np.array(sol["x"]).ravel()


def _point(simplex, lam):
    return lam @ np.asarray(simplex, dtype=np.float64)


def test_single_vertex():
    lam = kernels.simplex_closest(np.array([[1.0, 2.0, 3.0]]))
    assert lam.tolist() == [1.0]


def test_segment_interior():
    s = np.array([[1.0, -1.0, 0.0], [1.0, 1.0, 0.0]])
    lam = kernels.simplex_closest(s)
    assert np.allclose(_point(s, lam), [1.0, 0.0, 0.0], atol=1e-14)
    assert np.allclose(lam, [0.5, 0.5], atol=1e-14)


def test_segment_endpoint():
    s = np.array([[1.0, 1.0, 0.0], [2.0, 3.0, 0.0]])
    lam = kernels.simplex_closest(s)
    assert lam.tolist() == [1.0, 0.0]


def test_triangle_interior():
    s = np.array([[1.0, -1.0, -1.0], [1.0, 2.0, -1.0], [1.0, -1.0, 2.0]])
    lam = kernels.simplex_closest(s)
    assert np.allclose(_point(s, lam), [1.0, 0.0, 0.0], atol=1e-12)


def test_tetrahedron_contains_origin():
    s = np.array([
        [-1.0, -1.0, -1.0],
        [2.0, -1.0, -1.0],
        [-1.0, 2.0, -1.0],
        [-1.0, -1.0, 2.0],
    ])
    lam = kernels.simplex_closest(s)
    assert np.allclose(_point(s, lam), [0.0, 0.0, 0.0], atol=1e-12)
    assert abs(lam.sum() - 1.0) <= 1e-12
    assert np.all(lam >= -1e-14)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_matches_qp_oracle(n, rng):
    pytest.importorskip("cvxopt")
    for trial in range(40):
        s = rng.standard_normal((n, 3)) + rng.standard_normal(3)
        lam = kernels.simplex_closest(s)
        assert abs(lam.sum() - 1.0) <= 1e-10
        assert np.all(lam >= -1e-12)
        p = _point(s, lam)
        p_qp = _point(s, _qp_closest(s))
        # the interior-point oracle is only ~1e-7 accurate, so compare
        # distances tightly and points loosely
        assert np.linalg.norm(p) <= np.linalg.norm(p_qp) + 1e-7
        assert np.linalg.norm(p - p_qp) <= 1e-3


@pytest.mark.parametrize("n", [2, 3, 4])
def test_closest_point_is_projection(n, rng):
    # the returned point must not beat any sampled feasible point
    for trial in range(40):
        s = rng.standard_normal((n, 3)) + 0.5 * rng.standard_normal(3)
        lam = kernels.simplex_closest(s)
        p = _point(s, lam)
        alts = rng.dirichlet(np.ones(n), size=200)
        d_alt = np.linalg.norm(alts @ s, axis=1).min()
        assert np.linalg.norm(p) <= d_alt + 1e-10


def test_degenerate_repeated_vertices():
    s = np.array([[1.0, 0.0, 0.0]] * 4)
    lam = kernels.simplex_closest(s)
    assert abs(lam.sum() - 1.0) <= 1e-12
    assert np.allclose(_point(s, lam), [1.0, 0.0, 0.0], atol=1e-12)
