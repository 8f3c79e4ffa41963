"""Rigid transforms with a 6-dim tangent space.

Poses store a translation and a scalar-last unit quaternion (x, y, z, w).
Tangents are (linear, angular) pairs; perturbations are applied on the right,
q * exp(t), so tangent directions are expressed in the pose's own frame.
Serialization is 7 scalars `tx ty tz qx qy qz qw` formatted with %.17g.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ParseError


def _f(x):
    return np.asarray(x, dtype=np.float64).copy()


@dataclass(frozen=True)
class Tangent:
    """Element of the tangent space: linear (m) and angular (rad) parts."""

    linear: np.ndarray
    angular: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "linear", _f(self.linear).reshape(3))
        object.__setattr__(self, "angular", _f(self.angular).reshape(3))

    @staticmethod
    def zero():
        return Tangent(np.zeros(3), np.zeros(3))

    @staticmethod
    def from_vector(v):
        v = np.asarray(v, dtype=np.float64).reshape(6)
        return Tangent(v[:3], v[3:])

    def as_vector(self):
        return np.concatenate([self.linear, self.angular])


@dataclass(frozen=True)
class Pose:
    """Rigid transform: translation plus scalar-last unit quaternion."""

    translation: np.ndarray
    quaternion: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "translation", _f(self.translation).reshape(3))
        q = _f(self.quaternion).reshape(4)
        n = np.sqrt(q @ q)
        if not np.isfinite(n) or n < 1e-12:
            raise ParseError("quaternion norm is zero or non-finite")
        object.__setattr__(self, "quaternion", q / n)

    @staticmethod
    def identity():
        return Pose(np.zeros(3), np.array([0.0, 0.0, 0.0, 1.0]))


def identity():
    return Pose.identity()


def _quat_multiply(a, b):
    ax, ay, az, aw = a
    bx, by, bz, bw = b
    return np.array([
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
        aw * bw - ax * bx - ay * by - az * bz,
    ])


def rotation_matrix(q: Pose) -> np.ndarray:
    x, y, z, w = q.quaternion
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def skew(v):
    v = np.asarray(v, dtype=np.float64)
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def _exp_so3_and_V(w):
    """Rotation matrix exp([w]x) and the translation coupling matrix V."""
    th2 = float(w @ w)
    th = np.sqrt(th2)
    W = skew(w)
    W2 = W @ W
    if th < 1e-4:
        # series expansions, accurate and NaN-free near zero; the closed
        # forms cancel catastrophically for small angles
        A = 1.0 - th2 / 6.0 + th2 * th2 / 120.0
        B = 0.5 - th2 / 24.0 + th2 * th2 / 720.0
        C = 1.0 / 6.0 - th2 / 120.0 + th2 * th2 / 5040.0
    else:
        A = np.sin(th) / th
        h = np.sin(0.5 * th)
        B = 2.0 * h * h / th2
        C = (1.0 - A) / th2
    R = np.eye(3) + A * W + B * W2
    V = np.eye(3) + B * W + C * W2
    return R, V


def _quat_from_rotvec(w):
    th = np.sqrt(float(w @ w))
    if th < 1e-8:
        half = 0.5 - th * th / 48.0
        return np.array([w[0] * half, w[1] * half, w[2] * half, 1.0 - th * th / 8.0])
    s = np.sin(0.5 * th) / th
    return np.array([w[0] * s, w[1] * s, w[2] * s, np.cos(0.5 * th)])


def exp(t: Tangent) -> Pose:
    """SE(3) exponential: tangent to pose."""
    _, V = _exp_so3_and_V(t.angular)
    return Pose(V @ t.linear, _quat_from_rotvec(t.angular))


def log(q: Pose) -> Tangent:
    """SE(3) logarithm, inverse of exp for rotation angles below pi."""
    x, y, z, w = q.quaternion
    if w < 0.0:
        x, y, z, w = -x, -y, -z, -w
    vn = np.sqrt(x * x + y * y + z * z)
    if vn < 1e-12:
        ang = np.zeros(3)
    else:
        th = 2.0 * np.arctan2(vn, w)
        ang = np.array([x, y, z]) * (th / vn)
    th2 = float(ang @ ang)
    th = np.sqrt(th2)
    W = skew(ang)
    W2 = W @ W
    if th < 1e-3:
        D = 1.0 / 12.0 + th2 / 720.0 + th2 * th2 / 30240.0
    else:
        A = np.sin(th) / th
        h = np.sin(0.5 * th)
        B = 2.0 * h * h / th2
        D = (1.0 - 0.5 * A / B) / th2
    Vinv = np.eye(3) - 0.5 * W + D * W2
    return Tangent(Vinv @ q.translation, ang)


def rotate(q: Pose, v) -> np.ndarray:
    return rotation_matrix(q) @ np.asarray(v, dtype=np.float64)


def apply(q: Pose, p) -> np.ndarray:
    return rotate(q, p) + q.translation


def compose(a: Pose, b: Pose) -> Pose:
    return Pose(apply(a, b.translation), _quat_multiply(a.quaternion, b.quaternion))


def inverse(q: Pose) -> Pose:
    x, y, z, w = q.quaternion
    qc = np.array([-x, -y, -z, w])
    Rt = rotation_matrix(q).T
    return Pose(-(Rt @ q.translation), qc)


def perturb(q: Pose, t: Tangent) -> Pose:
    """Right perturbation q * exp(t): the tangent lives in q's own frame."""
    return compose(q, exp(t))


def dfdq_blocks(q: Pose, x_star, s2_local) -> np.ndarray:
    """Jacobian of q -> T(q) @ s2_local with respect to a right tangent.

    Columns are (linear x,y,z, angular x,y,z).  x_star is accepted for
    signature symmetry with the implicit-system assembly, which adds the
    curvature chain term through the rotated argument separately.
    """
    del x_star
    R = rotation_matrix(q)
    J = np.empty((3, 6))
    J[:, :3] = R
    J[:, 3:] = -R @ skew(s2_local)
    return J


# vectorized helpers used by the sampling estimators


def exp_many(Z):
    """Row-wise SE(3) exponential for an (M, 6) tangent array.

    Returns (translations (M, 3), quaternions (M, 4) scalar-last).
    """
    Z = np.asarray(Z, dtype=np.float64)
    lin = Z[:, :3]
    w = Z[:, 3:]
    th2 = np.einsum("ij,ij->i", w, w)
    th = np.sqrt(th2)
    small = th < 1e-4
    A = np.empty_like(th)
    B = np.empty_like(th)
    C = np.empty_like(th)
    ts = th2[small]
    A[small] = 1.0 - ts / 6.0 + ts * ts / 120.0
    B[small] = 0.5 - ts / 24.0 + ts * ts / 720.0
    C[small] = 1.0 / 6.0 - ts / 120.0 + ts * ts / 5040.0
    tl = th[~small]
    A[~small] = np.sin(tl) / tl
    hl = np.sin(0.5 * tl)
    B[~small] = 2.0 * hl * hl / (tl * tl)
    C[~small] = (1.0 - A[~small]) / (tl * tl)
    # V @ lin = lin + B (w x lin) + C (w x (w x lin))
    wxl = np.cross(w, lin)
    wwxl = np.cross(w, wxl)
    trans = lin + B[:, None] * wxl + C[:, None] * wwxl

    quat = np.empty((Z.shape[0], 4))
    s = np.empty_like(th)
    s[small] = 0.5 - th2[small] / 48.0
    s[~small] = np.sin(0.5 * tl) / tl
    quat[:, :3] = w * s[:, None]
    quat[small, 3] = 1.0 - th2[small] / 8.0
    quat[~small, 3] = np.cos(0.5 * tl)
    return trans, quat


def compose_many(q: Pose, trans, quat):
    """Compose q with a batch of poses given as raw arrays.

    Returns (rotation matrices (M, 3, 3), translations (M, 3)) of the results.
    """
    Rq = rotation_matrix(q)
    t_out = trans @ Rq.T + q.translation
    a = q.quaternion
    x, y, z, w = a
    bx, by, bz, bw = quat[:, 0], quat[:, 1], quat[:, 2], quat[:, 3]
    qo = np.empty_like(quat)
    qo[:, 0] = w * bx + x * bw + y * bz - z * by
    qo[:, 1] = w * by - x * bz + y * bw + z * bx
    qo[:, 2] = w * bz + x * by - y * bx + z * bw
    qo[:, 3] = w * bw - x * bx - y * by - z * bz
    xo, yo, zo, wo = qo[:, 0], qo[:, 1], qo[:, 2], qo[:, 3]
    M = quat.shape[0]
    R = np.empty((M, 3, 3))
    R[:, 0, 0] = 1 - 2 * (yo * yo + zo * zo)
    R[:, 0, 1] = 2 * (xo * yo - zo * wo)
    R[:, 0, 2] = 2 * (xo * zo + yo * wo)
    R[:, 1, 0] = 2 * (xo * yo + zo * wo)
    R[:, 1, 1] = 1 - 2 * (xo * xo + zo * zo)
    R[:, 1, 2] = 2 * (yo * zo - xo * wo)
    R[:, 2, 0] = 2 * (xo * zo - yo * wo)
    R[:, 2, 1] = 2 * (yo * zo + xo * wo)
    R[:, 2, 2] = 1 - 2 * (xo * xo + yo * yo)
    return R, t_out


# text serialization


def pose_to_text(q: Pose) -> str:
    vals = list(q.translation) + list(q.quaternion)
    return " ".join("%.17g" % v for v in vals)


def pose_from_text(text: str) -> Pose:
    parts = text.split()
    if len(parts) != 7:
        raise ParseError("pose needs 7 scalars: tx ty tz qx qy qz qw, got %d" % len(parts))
    try:
        vals = [float(p) for p in parts]
    except ValueError as e:
        raise ParseError("bad pose scalar: %s" % e) from None
    return Pose(np.array(vals[:3]), np.array(vals[3:]))
