import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diffcd import se3

finite = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False)
vec3 = st.tuples(finite, finite, finite).map(np.array)
quat_component = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False)
quat4 = st.tuples(quat_component, quat_component, quat_component, quat_component).filter(
    lambda q: np.linalg.norm(q) > 1e-3
).map(np.array)
pose_st = st.builds(se3.Pose, vec3, quat4)
small = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False)
tangent_st = st.builds(
    se3.Tangent,
    st.tuples(finite, finite, finite).map(np.array),
    st.tuples(small, small, small).map(np.array),
)


def test_pose_normalizes_quaternion():
    q = se3.Pose(np.zeros(3), np.array([0.0, 0.0, 0.0, 4.0]))
    assert abs(np.linalg.norm(q.quaternion) - 1.0) < 1e-12


def test_rotation_matrix_orthogonal(rng):
    for _ in range(50):
        q = se3.Pose(rng.standard_normal(3), rng.standard_normal(4))
        R = se3.rotation_matrix(q)
        assert np.max(np.abs(R.T @ R - np.eye(3))) <= 1e-10
        assert abs(np.linalg.det(R) - 1.0) <= 1e-10


def test_exp_zero_is_identity():
    q = se3.exp(se3.Tangent.zero())
    assert np.allclose(q.translation, 0.0)
    assert np.allclose(q.quaternion, [0, 0, 0, 1])


def test_exp_pure_translation():
    q = se3.exp(se3.Tangent(np.array([1.0, 0, 0]), np.zeros(3)))
    assert np.allclose(q.translation, [1, 0, 0], atol=1e-15)
    assert np.allclose(q.quaternion, [0, 0, 0, 1], atol=1e-15)


def test_exp_quarter_turn_about_z():
    q = se3.exp(se3.Tangent(np.zeros(3), np.array([0, 0, np.pi / 2])))
    assert np.allclose(se3.rotate(q, np.array([1.0, 0, 0])), [0, 1, 0], atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(tangent_st)
def test_exp_log_round_trip(t):
    angle = np.linalg.norm(t.angular)
    if angle >= np.pi - 1e-3:
        return
    back = se3.log(se3.exp(t))
    assert np.linalg.norm(back.as_vector() - t.as_vector()) <= 1e-9


@settings(max_examples=200, deadline=None)
@given(pose_st, pose_st, pose_st)
def test_compose_associative(a, b, c):
    lhs = se3.compose(se3.compose(a, b), c)
    rhs = se3.compose(a, se3.compose(b, c))
    assert np.linalg.norm(lhs.translation - rhs.translation) <= 1e-10
    # q and -q are the same rotation
    assert min(
        np.linalg.norm(lhs.quaternion - rhs.quaternion),
        np.linalg.norm(lhs.quaternion + rhs.quaternion),
    ) <= 1e-10


@settings(max_examples=200, deadline=None)
@given(pose_st)
def test_inverse_law(q):
    e = se3.compose(q, se3.inverse(q))
    assert np.linalg.norm(e.translation) <= 1e-10
    assert min(
        np.linalg.norm(e.quaternion - np.array([0, 0, 0, 1.0])),
        np.linalg.norm(e.quaternion + np.array([0, 0, 0, 1.0])),
    ) <= 1e-10


@settings(max_examples=100, deadline=None)
@given(pose_st, vec3)
def test_apply_inverse_round_trip(q, p):
    assert np.linalg.norm(se3.apply(se3.inverse(q), se3.apply(q, p)) - p) <= 1e-9


def test_apply_identity():
    p = np.array([1.0, 2.0, 3.0])
    assert np.allclose(se3.apply(se3.Pose.identity(), p), p)


def test_perturb_zero_is_identity(rng):
    q = se3.Pose(rng.standard_normal(3), rng.standard_normal(4))
    q2 = se3.perturb(q, se3.Tangent.zero())
    assert np.allclose(q2.translation, q.translation)
    assert np.allclose(q2.quaternion, q.quaternion)


def test_perturb_identity_is_exp():
    t = se3.Tangent(np.array([0.1, 0.2, 0.3]), np.array([0.3, -0.2, 0.1]))
    a = se3.perturb(se3.Pose.identity(), t)
    b = se3.exp(t)
    assert np.allclose(a.translation, b.translation, atol=1e-14)
    assert np.allclose(a.quaternion, b.quaternion, atol=1e-14)


def test_perturb_translation_is_rotated():
    q = se3.exp(se3.Tangent(np.zeros(3), np.array([0, 0, np.pi / 2])))
    t = se3.Tangent(np.array([1.0, 0, 0]), np.zeros(3))
    adv = se3.perturb(q, t).translation - q.translation
    assert np.allclose(adv, [0, 1, 0], atol=1e-12)


def test_log_near_pi_has_no_nan():
    t = se3.Tangent(np.zeros(3), np.array([np.pi - 1e-8, 0, 0]))
    back = se3.log(se3.exp(t))
    assert np.all(np.isfinite(back.as_vector()))


def _numeric_dfdq(q, x_star, s2_local, h=1e-6):
    def f_of(qq):
        R = se3.rotation_matrix(qq)
        return qq.translation + R @ s2_local

    J = np.empty((3, 6))
    for j in range(6):
        z = np.zeros(6)
        z[j] = h
        qp = se3.perturb(q, se3.Tangent.from_vector(z))
        qm = se3.perturb(q, se3.Tangent.from_vector(-z))
        J[:, j] = (f_of(qp) - f_of(qm)) / (2 * h)
    return J


def test_dfdq_translation_block_is_rotation(rng):
    q = se3.Pose(rng.standard_normal(3), rng.standard_normal(4))
    J = se3.dfdq_blocks(q, rng.standard_normal(3), rng.standard_normal(3))
    assert np.allclose(J[:, :3], se3.rotation_matrix(q))


def test_dfdq_matches_finite_differences(rng):
    worst = 0.0
    for _ in range(30):
        q = se3.Pose(rng.standard_normal(3), rng.standard_normal(4))
        x = rng.standard_normal(3)
        s2 = rng.standard_normal(3)
        J = se3.dfdq_blocks(q, x, s2)
        Jn = _numeric_dfdq(q, x, s2)
        worst = max(worst, np.max(np.abs(J - Jn)) / max(1.0, np.max(np.abs(Jn))))
    assert worst <= 1e-5


def test_dfdq_zero_local_point_kills_angular_block(rng):
    q = se3.Pose(rng.standard_normal(3), rng.standard_normal(4))
    J = se3.dfdq_blocks(q, rng.standard_normal(3), np.zeros(3))
    assert np.allclose(J[:, 3:], 0.0)


def test_pose_text_round_trip(rng):
    q = se3.Pose(rng.standard_normal(3), rng.standard_normal(4))
    q2 = se3.pose_from_text(se3.pose_to_text(q))
    assert np.array_equal(q.translation, q2.translation)
    assert np.array_equal(q.quaternion, q2.quaternion)


def test_pose_text_is_seven_scalars():
    text = se3.pose_to_text(se3.Pose.identity())
    assert len(text.split()) == 7


def test_exp_many_matches_exp(rng):
    Z = rng.standard_normal((20, 6))
    trans, quat = se3.exp_many(Z)
    for i in range(20):
        one = se3.exp(se3.Tangent.from_vector(Z[i]))
        assert np.allclose(trans[i], one.translation, atol=1e-13)
        assert np.allclose(quat[i], one.quaternion, atol=1e-13)


def test_compose_many_matches_compose(rng):
    q = se3.Pose(rng.standard_normal(3), rng.standard_normal(4))
    Z = rng.standard_normal((10, 6))
    trans, quat = se3.exp_many(Z)
    Rs, ts = se3.compose_many(q, trans, quat)
    for i in range(10):
        one = se3.compose(q, se3.Pose(trans[i], quat[i]))
        assert np.allclose(Rs[i], se3.rotation_matrix(one), atol=1e-12)
        assert np.allclose(ts[i], one.translation, atol=1e-12)
