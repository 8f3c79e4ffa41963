import numpy as np
import pytest

from diffcd import se3
from diffcd.bench import generate_polyhedral_ellipsoid
from diffcd.shapes import build_convex_mesh


def random_pose(rng, translation_scale=1.0):
    return se3.Pose(
        translation_scale * rng.standard_normal(3),
        rng.standard_normal(4),
    )


def separated_pose(rng, distance):
    u = rng.standard_normal(3)
    u /= np.linalg.norm(u)
    return se3.Pose(distance * u, rng.standard_normal(4))


def random_mesh(seed, n_vertices=12):
    return generate_polyhedral_ellipsoid(seed, n_vertices)


def cube_mesh(half=1.0):
    pts = np.array(
        [[sx * half, sy * half, sz * half]
         for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)],
        dtype=np.float64,
    )
    return build_convex_mesh(pts)


def rel_frob(a, b):
    denom = max(np.linalg.norm(b), 1e-12)
    return np.linalg.norm(a - b) / denom


@pytest.fixture
def rng():
    return np.random.default_rng(0)
