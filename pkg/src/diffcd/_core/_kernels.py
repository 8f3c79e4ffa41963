# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Numeric kernels: support queries, GJK/EPA narrow phase, support-function
Hessians and the first-order witness-Jacobian assembly.

This file is valid Python and doubles as Cython pure-mode source.  When the
package is built, it is compiled to a C extension; otherwise the interpreter
runs it directly (slowly, but with identical results).
"""

import cython
import numpy as np

if cython.compiled:
    from cython.cimports.libc.math import exp as c_exp
    from cython.cimports.libc.math import fabs, sqrt
else:
    from math import exp as c_exp
    from math import fabs, sqrt

COMPILED = cython.compiled

# shape kind codes, mirrored by diffcd.shapes
SPHERE = 0
ELLIPSOID = 1
BOX = 2
CAPSULE = 3
MESH = 4

# flag bits reported by gjk_epa / first_order_kernel
FLAG_MAX_ITERATIONS = 1
FLAG_MAX_FACES = 2
FLAG_DEGENERATE = 4
FLAG_POLISH_FAILED = 8
FLAG_TOUCHING = 16
FLAG_SINGULAR = 32


# ---------------------------------------------------------------------------
# support functions
# ---------------------------------------------------------------------------


@cython.cfunc
def _support(
    kind: cython.int,
    params: cython.double[::1],
    V: cython.double[:, ::1],
    dx: cython.double,
    dy: cython.double,
    dz: cython.double,
    out: cython.double[::1],
) -> cython.int:
    """Support point of a shape in direction d, written to out.

    Returns the vertex index for meshes, -1 otherwise.  The support value is
    always <out, d>.
    """
    i: cython.Py_ssize_t
    best: cython.Py_ssize_t
    n: cython.Py_ssize_t
    nd: cython.double
    s: cython.double
    sc: cython.double
    ex: cython.double
    ey: cython.double
    ez: cython.double

    if kind == SPHERE:
        nd = sqrt(dx * dx + dy * dy + dz * dz)
        sc = params[0] / nd
        out[0] = sc * dx
        out[1] = sc * dy
        out[2] = sc * dz
        return -1
    if kind == ELLIPSOID:
        ex = params[0] * params[0] * dx
        ey = params[1] * params[1] * dy
        ez = params[2] * params[2] * dz
        s = sqrt(ex * dx + ey * dy + ez * dz)
        out[0] = ex / s
        out[1] = ey / s
        out[2] = ez / s
        return -1
    if kind == BOX:
        out[0] = params[0] if dx >= 0.0 else -params[0]
        out[1] = params[1] if dy >= 0.0 else -params[1]
        out[2] = params[2] if dz >= 0.0 else -params[2]
        return -1
    if kind == CAPSULE:
        # segment of half-length params[0] along z plus sphere of radius params[1]
        nd = sqrt(dx * dx + dy * dy + dz * dz)
        sc = params[1] / nd
        out[0] = sc * dx
        out[1] = sc * dy
        out[2] = sc * dz + (params[0] if dz >= 0.0 else -params[0])
        return -1
    # mesh: argmax of vertex scores, lowest index wins ties
    n = V.shape[0]
    best = 0
    s = V[0, 0] * dx + V[0, 1] * dy + V[0, 2] * dz
    for i in range(1, n):
        sc = V[i, 0] * dx + V[i, 1] * dy + V[i, 2] * dz
        if sc > s:
            s = sc
            best = i
    out[0] = V[best, 0]
    out[1] = V[best, 1]
    out[2] = V[best, 2]
    return best


def support_point(kind, params, V, d, out_point):
    """Python-facing support query: returns (value, vertex_index)."""
    dmv: cython.double[::1] = d
    idx: cython.int = _support(kind, params, V, dmv[0], dmv[1], dmv[2], out_point)
    val: cython.double = out_point[0] * dmv[0] + out_point[1] * dmv[1] + out_point[2] * dmv[2]
    return val, idx


@cython.cfunc
def _analytic_hessian(
    kind: cython.int,
    params: cython.double[::1],
    dx: cython.double,
    dy: cython.double,
    dz: cython.double,
    H: cython.double[:, ::1],
) -> cython.int:
    """Exact support-function Hessian at d for smooth primitives.

    Returns 1 on success, 0 when no analytic form exists (box, capsule, mesh).
    """
    nd: cython.double
    s: cython.double
    r: cython.double
    gx: cython.double
    gy: cython.double
    gz: cython.double
    a0: cython.double
    a1: cython.double
    a2: cython.double

    if kind == SPHERE:
        nd = sqrt(dx * dx + dy * dy + dz * dz)
        r = params[0] / nd
        s = 1.0 / (nd * nd)
        H[0, 0] = r * (1.0 - dx * dx * s)
        H[0, 1] = -r * dx * dy * s
        H[0, 2] = -r * dx * dz * s
        H[1, 0] = H[0, 1]
        H[1, 1] = r * (1.0 - dy * dy * s)
        H[1, 2] = -r * dy * dz * s
        H[2, 0] = H[0, 2]
        H[2, 1] = H[1, 2]
        H[2, 2] = r * (1.0 - dz * dz * s)
        return 1
    if kind == ELLIPSOID:
        a0 = params[0] * params[0]
        a1 = params[1] * params[1]
        a2 = params[2] * params[2]
        gx = a0 * dx
        gy = a1 * dy
        gz = a2 * dz
        s = sqrt(gx * dx + gy * dy + gz * dz)
        r = 1.0 / (s * s * s)
        H[0, 0] = a0 / s - gx * gx * r
        H[0, 1] = -gx * gy * r
        H[0, 2] = -gx * gz * r
        H[1, 0] = H[0, 1]
        H[1, 1] = a1 / s - gy * gy * r
        H[1, 2] = -gy * gz * r
        H[2, 0] = H[0, 2]
        H[2, 1] = H[1, 2]
        H[2, 2] = a2 / s - gz * gz * r
        return 1
    return 0


def analytic_hessian(kind, params, d, H):
    """Exact Hessian into H; returns True when the shape has one."""
    dmv: cython.double[::1] = d
    return _analytic_hessian(kind, params, dmv[0], dmv[1], dmv[2], H) == 1


# ---------------------------------------------------------------------------
# distance sub-algorithm (signed volumes)
# ---------------------------------------------------------------------------


@cython.cfunc
@cython.inline
def _same_sign(a: cython.double, b: cython.double) -> cython.int:
    if a > 0.0 and b > 0.0:
        return 1
    if a < 0.0 and b < 0.0:
        return 1
    return 0


@cython.cfunc
def _s1d(
    ax: cython.double, ay: cython.double, az: cython.double,
    bx: cython.double, by: cython.double, bz: cython.double,
    lam: cython.double[::1],
) -> cython.void:
    """Barycentric coords of the origin projection onto segment [a, b]."""
    dx: cython.double = bx - ax
    dy: cython.double = by - ay
    dz: cython.double = bz - az
    dd: cython.double = dx * dx + dy * dy + dz * dz
    if dd <= 0.0:
        lam[0] = 1.0
        lam[1] = 0.0
        return
    # projection of origin onto the line through a, b
    tpar: cython.double = -(bx * dx + by * dy + bz * dz) / dd
    px: cython.double = bx + tpar * dx
    py: cython.double = by + tpar * dy
    pz: cython.double = bz + tpar * dz

    mu_max: cython.double = dx
    idx: cython.int = 0
    if fabs(dy) > fabs(mu_max):
        mu_max = dy
        idx = 1
    if fabs(dz) > fabs(mu_max):
        mu_max = dz
        idx = 2
    mu_max = -mu_max  # a - b along the chosen axis

    pa: cython.double = ax if idx == 0 else (ay if idx == 1 else az)
    pb: cython.double = bx if idx == 0 else (by if idx == 1 else bz)
    pp: cython.double = px if idx == 0 else (py if idx == 1 else pz)
    c1: cython.double = pp - pb
    c2: cython.double = pa - pp
    if _same_sign(mu_max, c1) and _same_sign(mu_max, c2):
        lam[0] = c1 / mu_max
        lam[1] = c2 / mu_max
        return
    # closest vertex
    if ax * ax + ay * ay + az * az < bx * bx + by * by + bz * bz:
        lam[0] = 1.0
        lam[1] = 0.0
    else:
        lam[0] = 0.0
        lam[1] = 1.0


@cython.cfunc
def _s2d(
    ax: cython.double, ay: cython.double, az: cython.double,
    bx: cython.double, by: cython.double, bz: cython.double,
    cx: cython.double, cy: cython.double, cz: cython.double,
    lam: cython.double[::1],
) -> cython.void:
    """Barycentric coords of the closest point to the origin on triangle abc."""
    sub: cython.double[::1]
    d1: cython.double
    d2: cython.double
    nx: cython.double
    ny: cython.double
    nz: cython.double
    nn: cython.double
    nv: cython.double
    px: cython.double
    py: cython.double
    pz: cython.double

    # triangle normal
    nx = (by - ay) * (cz - az) - (bz - az) * (cy - ay)
    ny = (bz - az) * (cx - ax) - (bx - ax) * (cz - az)
    nz = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    nn = nx * nx + ny * ny + nz * nz
    if nn <= 0.0:
        # degenerate triangle: fall back to the best edge
        scratch = np.empty(2)
        best = 1e300
        _s1d(ax, ay, az, bx, by, bz, scratch)
        px = scratch[0] * ax + scratch[1] * bx
        py = scratch[0] * ay + scratch[1] * by
        pz = scratch[0] * az + scratch[1] * bz
        best = px * px + py * py + pz * pz
        lam[0] = scratch[0]
        lam[1] = scratch[1]
        lam[2] = 0.0
        _s1d(ax, ay, az, cx, cy, cz, scratch)
        px = scratch[0] * ax + scratch[1] * cx
        py = scratch[0] * ay + scratch[1] * cy
        pz = scratch[0] * az + scratch[1] * cz
        if px * px + py * py + pz * pz < best:
            lam[0] = scratch[0]
            lam[1] = 0.0
            lam[2] = scratch[1]
        return
    # projection of the origin onto the triangle plane
    nv = nx * ax + ny * ay + nz * az
    px = nx * (nv / nn)
    py = ny * (nv / nn)
    pz = nz * (nv / nn)

    # drop the axis with the largest normal component
    m1: cython.double = fabs(nx)
    m2: cython.double = fabs(ny)
    m3: cython.double = fabs(nz)
    ui: cython.int
    vi: cython.int
    mmax: cython.double
    if m1 >= m2 and m1 >= m3:
        ui = 1
        vi = 2
        mmax = nx
    elif m2 >= m3:
        ui = 2
        vi = 0
        mmax = ny
    else:
        ui = 0
        vi = 1
        mmax = nz

    au: cython.double = ay if ui == 1 else (az if ui == 2 else ax)
    av: cython.double = az if vi == 2 else (ax if vi == 0 else ay)
    bu: cython.double = by if ui == 1 else (bz if ui == 2 else bx)
    bv: cython.double = bz if vi == 2 else (bx if vi == 0 else by)
    cu: cython.double = cy if ui == 1 else (cz if ui == 2 else cx)
    cv: cython.double = cz if vi == 2 else (cx if vi == 0 else cy)
    pu: cython.double = py if ui == 1 else (pz if ui == 2 else px)
    pv: cython.double = pz if vi == 2 else (px if vi == 0 else py)

    # signed areas of the sub-triangles spanned with the projected origin
    c1: cython.double = pu * bv + pv * cu + bu * cv - pu * cv - pv * bu - cu * bv
    c2: cython.double = pu * cv + pv * au + cu * av - pu * av - pv * cu - au * cv
    c3: cython.double = pu * av + pv * bu + au * bv - pu * bv - pv * au - bu * av

    if _same_sign(mmax, c1) and _same_sign(mmax, c2) and _same_sign(mmax, c3):
        lam[0] = c1 / mmax
        lam[1] = c2 / mmax
        lam[2] = c3 / mmax
        return

    # recurse on the edges whose side test failed
    sub = np.empty(2)
    best: cython.double = 1e300
    d: cython.double
    lam[0] = 1.0
    lam[1] = 0.0
    lam[2] = 0.0
    if not _same_sign(mmax, c1):
        _s1d(bx, by, bz, cx, cy, cz, sub)
        d1 = sub[0] * bx + sub[1] * cx
        d2 = sub[0] * by + sub[1] * cy
        d = d1 * d1 + d2 * d2
        d1 = sub[0] * bz + sub[1] * cz
        d += d1 * d1
        if d < best:
            best = d
            lam[0] = 0.0
            lam[1] = sub[0]
            lam[2] = sub[1]
    if not _same_sign(mmax, c2):
        _s1d(ax, ay, az, cx, cy, cz, sub)
        d1 = sub[0] * ax + sub[1] * cx
        d2 = sub[0] * ay + sub[1] * cy
        d = d1 * d1 + d2 * d2
        d1 = sub[0] * az + sub[1] * cz
        d += d1 * d1
        if d < best:
            best = d
            lam[0] = sub[0]
            lam[1] = 0.0
            lam[2] = sub[1]
    if not _same_sign(mmax, c3):
        _s1d(ax, ay, az, bx, by, bz, sub)
        d1 = sub[0] * ax + sub[1] * bx
        d2 = sub[0] * ay + sub[1] * by
        d = d1 * d1 + d2 * d2
        d1 = sub[0] * az + sub[1] * bz
        d += d1 * d1
        if d < best:
            best = d
            lam[0] = sub[0]
            lam[1] = sub[1]
            lam[2] = 0.0


@cython.cfunc
def _s3d(s: cython.double[:, ::1], lam: cython.double[::1]) -> cython.void:
    """Barycentric coords of the closest point to the origin in tetra rows 0..3."""
    sub: cython.double[::1]
    c41: cython.double = -(
        s[1, 0] * (s[2, 1] * s[3, 2] - s[2, 2] * s[3, 1])
        - s[1, 1] * (s[2, 0] * s[3, 2] - s[2, 2] * s[3, 0])
        + s[1, 2] * (s[2, 0] * s[3, 1] - s[2, 1] * s[3, 0])
    )
    c42: cython.double = (
        s[0, 0] * (s[2, 1] * s[3, 2] - s[2, 2] * s[3, 1])
        - s[0, 1] * (s[2, 0] * s[3, 2] - s[2, 2] * s[3, 0])
        + s[0, 2] * (s[2, 0] * s[3, 1] - s[2, 1] * s[3, 0])
    )
    c43: cython.double = -(
        s[0, 0] * (s[1, 1] * s[3, 2] - s[1, 2] * s[3, 1])
        - s[0, 1] * (s[1, 0] * s[3, 2] - s[1, 2] * s[3, 0])
        + s[0, 2] * (s[1, 0] * s[3, 1] - s[1, 1] * s[3, 0])
    )
    c44: cython.double = (
        s[0, 0] * (s[1, 1] * s[2, 2] - s[1, 2] * s[2, 1])
        - s[0, 1] * (s[1, 0] * s[2, 2] - s[1, 2] * s[2, 0])
        + s[0, 2] * (s[1, 0] * s[2, 1] - s[1, 1] * s[2, 0])
    )
    mdet: cython.double = c41 + c42 + c43 + c44

    if (
        _same_sign(mdet, c41)
        and _same_sign(mdet, c42)
        and _same_sign(mdet, c43)
        and _same_sign(mdet, c44)
    ):
        lam[0] = c41 / mdet
        lam[1] = c42 / mdet
        lam[2] = c43 / mdet
        lam[3] = c44 / mdet
        return

    sub = np.empty(3)
    best: cython.double = 1e300
    d: cython.double
    px: cython.double
    py: cython.double
    pz: cython.double
    lam[0] = 1.0
    lam[1] = 0.0
    lam[2] = 0.0
    lam[3] = 0.0
    if not _same_sign(mdet, c41):
        _s2d(s[1, 0], s[1, 1], s[1, 2], s[2, 0], s[2, 1], s[2, 2], s[3, 0], s[3, 1], s[3, 2], sub)
        px = sub[0] * s[1, 0] + sub[1] * s[2, 0] + sub[2] * s[3, 0]
        py = sub[0] * s[1, 1] + sub[1] * s[2, 1] + sub[2] * s[3, 1]
        pz = sub[0] * s[1, 2] + sub[1] * s[2, 2] + sub[2] * s[3, 2]
        d = px * px + py * py + pz * pz
        if d < best:
            best = d
            lam[0] = 0.0
            lam[1] = sub[0]
            lam[2] = sub[1]
            lam[3] = sub[2]
    if not _same_sign(mdet, c42):
        _s2d(s[0, 0], s[0, 1], s[0, 2], s[2, 0], s[2, 1], s[2, 2], s[3, 0], s[3, 1], s[3, 2], sub)
        px = sub[0] * s[0, 0] + sub[1] * s[2, 0] + sub[2] * s[3, 0]
        py = sub[0] * s[0, 1] + sub[1] * s[2, 1] + sub[2] * s[3, 1]
        pz = sub[0] * s[0, 2] + sub[1] * s[2, 2] + sub[2] * s[3, 2]
        d = px * px + py * py + pz * pz
        if d < best:
            best = d
            lam[0] = sub[0]
            lam[1] = 0.0
            lam[2] = sub[1]
            lam[3] = sub[2]
    if not _same_sign(mdet, c43):
        _s2d(s[0, 0], s[0, 1], s[0, 2], s[1, 0], s[1, 1], s[1, 2], s[3, 0], s[3, 1], s[3, 2], sub)
        px = sub[0] * s[0, 0] + sub[1] * s[1, 0] + sub[2] * s[3, 0]
        py = sub[0] * s[0, 1] + sub[1] * s[1, 1] + sub[2] * s[3, 1]
        pz = sub[0] * s[0, 2] + sub[1] * s[1, 2] + sub[2] * s[3, 2]
        d = px * px + py * py + pz * pz
        if d < best:
            best = d
            lam[0] = sub[0]
            lam[1] = sub[1]
            lam[2] = 0.0
            lam[3] = sub[2]
    if not _same_sign(mdet, c44):
        _s2d(s[0, 0], s[0, 1], s[0, 2], s[1, 0], s[1, 1], s[1, 2], s[2, 0], s[2, 1], s[2, 2], sub)
        px = sub[0] * s[0, 0] + sub[1] * s[1, 0] + sub[2] * s[2, 0]
        py = sub[0] * s[0, 1] + sub[1] * s[1, 1] + sub[2] * s[2, 1]
        pz = sub[0] * s[0, 2] + sub[1] * s[1, 2] + sub[2] * s[2, 2]
        d = px * px + py * py + pz * pz
        if d < best:
            best = d
            lam[0] = sub[0]
            lam[1] = sub[1]
            lam[2] = sub[2]
            lam[3] = 0.0


def simplex_closest(simplex):
    """Barycentric coordinates of the closest point to the origin in a simplex.

    simplex is an (n, 3) array with 1 <= n <= 4; returns an (n,) array of
    coordinates (zeros mark discarded vertices).
    """
    s = np.ascontiguousarray(simplex, dtype=np.float64)
    n = s.shape[0]
    lam = np.zeros(4)
    if n == 1:
        lam[0] = 1.0
    elif n == 2:
        _s1d(s[0, 0], s[0, 1], s[0, 2], s[1, 0], s[1, 1], s[1, 2], lam)
    elif n == 3:
        _s2d(
            s[0, 0], s[0, 1], s[0, 2],
            s[1, 0], s[1, 1], s[1, 2],
            s[2, 0], s[2, 1], s[2, 2],
            lam,
        )
    else:
        _s3d(s, lam)
    return lam[:n]


# ---------------------------------------------------------------------------
# GJK + EPA
# ---------------------------------------------------------------------------


@cython.cfunc
def _support_mink(
    kind1: cython.int, params1: cython.double[::1], V1: cython.double[:, ::1],
    kind2: cython.int, params2: cython.double[::1], V2: cython.double[:, ::1],
    R: cython.double[:, ::1], t: cython.double[::1],
    dx: cython.double, dy: cython.double, dz: cython.double,
    p1: cython.double[::1], p2: cython.double[::1],
) -> cython.void:
    """Support of the Minkowski difference at direction d.

    Writes the shape-1 support point to p1 and the shape-2 support point
    (already mapped to shape-1's frame) to p2.
    """
    lx: cython.double = -(R[0, 0] * dx + R[1, 0] * dy + R[2, 0] * dz)
    ly: cython.double = -(R[0, 1] * dx + R[1, 1] * dy + R[2, 1] * dz)
    lz: cython.double = -(R[0, 2] * dx + R[1, 2] * dy + R[2, 2] * dz)
    _support(kind1, params1, V1, dx, dy, dz, p1)
    _support(kind2, params2, V2, lx, ly, lz, p2)
    wx: cython.double = R[0, 0] * p2[0] + R[0, 1] * p2[1] + R[0, 2] * p2[2] + t[0]
    wy: cython.double = R[1, 0] * p2[0] + R[1, 1] * p2[1] + R[1, 2] * p2[2] + t[1]
    wz: cython.double = R[2, 0] * p2[0] + R[2, 1] * p2[1] + R[2, 2] * p2[2] + t[2]
    p2[0] = wx
    p2[1] = wy
    p2[2] = wz


@cython.cfunc
def _interior_diff(
    kind1: cython.int, V1: cython.double[:, ::1],
    kind2: cython.int, V2: cython.double[:, ::1],
    R: cython.double[:, ::1], t: cython.double[::1],
    out: cython.double[::1],
) -> cython.void:
    """Difference of interior points of the two shapes, in shape-1's frame."""
    i: cython.Py_ssize_t
    n: cython.Py_ssize_t
    cx: cython.double = 0.0
    cy: cython.double = 0.0
    cz: cython.double = 0.0
    if kind1 == MESH:
        n = V1.shape[0]
        for i in range(n):
            cx += V1[i, 0]
            cy += V1[i, 1]
            cz += V1[i, 2]
        cx /= n
        cy /= n
        cz /= n
    dx: cython.double = 0.0
    dy: cython.double = 0.0
    dz: cython.double = 0.0
    if kind2 == MESH:
        n = V2.shape[0]
        for i in range(n):
            dx += V2[i, 0]
            dy += V2[i, 1]
            dz += V2[i, 2]
        dx /= n
        dy /= n
        dz /= n
    out[0] = cx - (R[0, 0] * dx + R[0, 1] * dy + R[0, 2] * dz + t[0])
    out[1] = cy - (R[1, 0] * dx + R[1, 1] * dy + R[1, 2] * dz + t[1])
    out[2] = cz - (R[2, 0] * dx + R[2, 1] * dy + R[2, 2] * dz + t[2])


@cython.cfunc
def _grad_local(
    kind: cython.int,
    params: cython.double[::1],
    V: cython.double[:, ::1],
    dx: cython.double, dy: cython.double, dz: cython.double,
    out: cython.double[::1],
) -> cython.void:
    _support(kind, params, V, dx, dy, dz, out)


@cython.cfunc
def _solve3(
    A: cython.double[:, ::1],
    b0: cython.double, b1: cython.double, b2: cython.double,
    out: cython.double[::1],
) -> cython.int:
    """Solve the 3x3 system A x = b via the adjugate; returns 0 on singular A."""
    a00: cython.double = A[0, 0]
    a01: cython.double = A[0, 1]
    a02: cython.double = A[0, 2]
    a10: cython.double = A[1, 0]
    a11: cython.double = A[1, 1]
    a12: cython.double = A[1, 2]
    a20: cython.double = A[2, 0]
    a21: cython.double = A[2, 1]
    a22: cython.double = A[2, 2]
    c00: cython.double = a11 * a22 - a12 * a21
    c01: cython.double = a12 * a20 - a10 * a22
    c02: cython.double = a10 * a21 - a11 * a20
    det: cython.double = a00 * c00 + a01 * c01 + a02 * c02
    if fabs(det) < 1e-300:
        return 0
    c10: cython.double = a02 * a21 - a01 * a22
    c11: cython.double = a00 * a22 - a02 * a20
    c12: cython.double = a01 * a20 - a00 * a21
    c20: cython.double = a01 * a12 - a02 * a11
    c21: cython.double = a02 * a10 - a00 * a12
    c22: cython.double = a00 * a11 - a01 * a10
    out[0] = (c00 * b0 + c10 * b1 + c20 * b2) / det
    out[1] = (c01 * b0 + c11 * b1 + c21 * b2) / det
    out[2] = (c02 * b0 + c12 * b1 + c22 * b2) / det
    return 1


@cython.cfunc
def _polish_smooth(
    kind1: cython.int, params1: cython.double[::1],
    kind2: cython.int, params2: cython.double[::1],
    R: cython.double[:, ::1], t: cython.double[::1],
    colliding: cython.int,
    x: cython.double[::1],
    w1: cython.double[::1], w2: cython.double[::1],
) -> cython.int:
    """Newton refinement of the separation vector for smooth strictly-convex
    pairs, solving the stationarity equation of the projection problem.

    Updates x, w1, w2 in place; returns 1 on convergence.
    """
    V0 = np.empty((0, 3))
    Vmv: cython.double[:, ::1] = V0
    g1 = np.empty(3)
    g2 = np.empty(3)
    f = np.empty(3)
    dxv = np.empty(3)
    xn = np.empty(3)
    H1 = np.empty((3, 3))
    H2 = np.empty((3, 3))
    A = np.empty((3, 3))
    g1v: cython.double[::1] = g1
    g2v: cython.double[::1] = g2
    fv: cython.double[::1] = f
    dv: cython.double[::1] = dxv
    xnv: cython.double[::1] = xn
    H1v: cython.double[:, ::1] = H1
    H2v: cython.double[:, ::1] = H2
    Av: cython.double[:, ::1] = A

    sgn: cython.double = -1.0 if colliding == 0 else 1.0
    it: cython.int
    i: cython.int
    j: cython.int
    k: cython.int
    lx: cython.double
    ly: cython.double
    lz: cython.double
    fn: cython.double
    fn_new: cython.double
    alpha: cython.double
    acc: cython.double
    scale: cython.double = sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])
    if scale < 1.0:
        scale = 1.0
    tol: cython.double = 1e-13 * scale

    cur = np.empty(3)
    cv: cython.double[::1] = cur
    cv[0] = x[0]
    cv[1] = x[1]
    cv[2] = x[2]

    fn = 1e300
    for it in range(60):
        # f(x) = x - grad1(sgn*x) + R grad2(-sgn*R^T x) + t
        _grad_local(kind1, params1, Vmv, sgn * cv[0], sgn * cv[1], sgn * cv[2], g1v)
        lx = -sgn * (R[0, 0] * cv[0] + R[1, 0] * cv[1] + R[2, 0] * cv[2])
        ly = -sgn * (R[0, 1] * cv[0] + R[1, 1] * cv[1] + R[2, 1] * cv[2])
        lz = -sgn * (R[0, 2] * cv[0] + R[1, 2] * cv[1] + R[2, 2] * cv[2])
        _grad_local(kind2, params2, Vmv, lx, ly, lz, g2v)
        for i in range(3):
            fv[i] = (
                cv[i]
                - g1v[i]
                + R[i, 0] * g2v[0] + R[i, 1] * g2v[1] + R[i, 2] * g2v[2]
                + t[i]
            )
        fn = sqrt(fv[0] * fv[0] + fv[1] * fv[1] + fv[2] * fv[2])
        if fn < tol:
            break
        _analytic_hessian(kind1, params1, sgn * cv[0], sgn * cv[1], sgn * cv[2], H1v)
        _analytic_hessian(kind2, params2, lx, ly, lz, H2v)
        # A = I - sgn * (H1 + R H2 R^T); separated branch has sgn = -1
        for i in range(3):
            for j in range(3):
                acc = 0.0
                for k in range(3):
                    acc += (
                        R[i, 0] * H2v[0, k]
                        + R[i, 1] * H2v[1, k]
                        + R[i, 2] * H2v[2, k]
                    ) * R[j, k]
                Av[i, j] = -sgn * (H1v[i, j] + acc)
        Av[0, 0] += 1.0
        Av[1, 1] += 1.0
        Av[2, 2] += 1.0
        if _solve3(Av, fv[0], fv[1], fv[2], dv) == 0:
            return 0
        # damped step: accept the largest halving that decreases the residual
        alpha = 1.0
        for _ in range(20):
            xnv[0] = cv[0] - alpha * dv[0]
            xnv[1] = cv[1] - alpha * dv[1]
            xnv[2] = cv[2] - alpha * dv[2]
            _grad_local(kind1, params1, Vmv, sgn * xnv[0], sgn * xnv[1], sgn * xnv[2], g1v)
            lx = -sgn * (R[0, 0] * xnv[0] + R[1, 0] * xnv[1] + R[2, 0] * xnv[2])
            ly = -sgn * (R[0, 1] * xnv[0] + R[1, 1] * xnv[1] + R[2, 1] * xnv[2])
            lz = -sgn * (R[0, 2] * xnv[0] + R[1, 2] * xnv[1] + R[2, 2] * xnv[2])
            _grad_local(kind2, params2, Vmv, lx, ly, lz, g2v)
            for i in range(3):
                fv[i] = (
                    xnv[i]
                    - g1v[i]
                    + R[i, 0] * g2v[0] + R[i, 1] * g2v[1] + R[i, 2] * g2v[2]
                    + t[i]
                )
            fn_new = sqrt(fv[0] * fv[0] + fv[1] * fv[1] + fv[2] * fv[2])
            if fn_new < fn:
                break
            alpha *= 0.5
        else:
            return 0
        cv[0] = xnv[0]
        cv[1] = xnv[1]
        cv[2] = xnv[2]

    if fn >= tol:
        return 0
    x[0] = cv[0]
    x[1] = cv[1]
    x[2] = cv[2]
    _grad_local(kind1, params1, Vmv, sgn * cv[0], sgn * cv[1], sgn * cv[2], g1v)
    w1[0] = g1v[0]
    w1[1] = g1v[1]
    w1[2] = g1v[2]
    w2[0] = g1v[0] - cv[0]
    w2[1] = g1v[1] - cv[1]
    w2[2] = g1v[2] - cv[2]
    return 1


def gjk_epa(
    kind1, params1, V1,
    kind2, params2, V2,
    R, t,
    tol, max_iter, epa_tol, epa_max_faces,
    guess, seed_n, seed1, seed2l, polish, run_epa,
    w1out, w2out, w2lout, simplex_out, sup1_out, sup2l_out,
):
    """Full narrow-phase query in shape-1's frame.

    Returns (distance, colliding, gjk_iters, epa_iters, flags, simplex_dim)
    where distance is unsigned; witnesses are written to the out arrays
    (w2out in shape-1's frame, w2lout in shape-2's local frame), the terminal
    simplex of the Minkowski difference to simplex_out (4, 3), and its support
    decomposition to sup1_out / sup2l_out (shape-2 points in its local frame,
    so a seed survives a pose change).

    seed_n > 0 preloads the simplex from seed1/seed2l (4, 3) support pairs;
    an optimal seed converges in one iteration.
    """
    k1: cython.int = kind1
    k2: cython.int = kind2
    p1mv: cython.double[::1] = params1
    p2mv: cython.double[::1] = params2
    V1mv: cython.double[:, ::1] = V1
    V2mv: cython.double[:, ::1] = V2
    Rmv: cython.double[:, ::1] = R
    tmv: cython.double[::1] = t
    gmv: cython.double[::1] = guess
    sdn: cython.int = seed_n
    sd1: cython.double[:, ::1] = seed1
    sd2: cython.double[:, ::1] = seed2l
    so1: cython.double[:, ::1] = sup1_out
    so2: cython.double[:, ::1] = sup2l_out
    do_epa: cython.int = run_epa
    w1: cython.double[::1] = w1out
    w2: cython.double[::1] = w2out
    w2l: cython.double[::1] = w2lout
    sout: cython.double[:, ::1] = simplex_out
    gtol: cython.double = tol
    maxit: cython.int = max_iter
    do_polish: cython.int = polish

    sim = np.empty((4, 3))
    sim1 = np.empty((4, 3))
    sim2 = np.empty((4, 3))
    lam = np.zeros(4)
    sp1 = np.empty(3)
    sp2 = np.empty(3)
    xarr = np.empty(3)
    simv: cython.double[:, ::1] = sim
    sim1v: cython.double[:, ::1] = sim1
    sim2v: cython.double[:, ::1] = sim2
    lamv: cython.double[::1] = lam
    sp1v: cython.double[::1] = sp1
    sp2v: cython.double[::1] = sp2
    xv: cython.double[::1] = xarr

    i: cython.int
    j: cython.int
    n: cython.int = 0
    it: cython.int = 0
    flags: cython.int = 0
    colliding: cython.int = 0
    xx: cython.double
    xs: cython.double
    gap: cython.double
    sx: cython.double
    sy: cython.double
    sz: cython.double
    dup: cython.int

    # initial iterate: warm-start guess, else interior-point difference
    xv[0] = gmv[0]
    xv[1] = gmv[1]
    xv[2] = gmv[2]
    xx = xv[0] * xv[0] + xv[1] * xv[1] + xv[2] * xv[2]
    if xx < 1e-24:
        _interior_diff(k1, V1mv, k2, V2mv, Rmv, tmv, xv)
        xx = xv[0] * xv[0] + xv[1] * xv[1] + xv[2] * xv[2]
        if xx < 1e-24:
            xv[0] = 1e-3
            xv[1] = 0.0
            xv[2] = 0.0

    if sdn > 0:
        # reload the previous terminal simplex; a still-optimal seed makes
        # the first gap check succeed immediately
        n = sdn if sdn < 4 else 4
        for i in range(n):
            sx = sd2[i, 0]
            sy = sd2[i, 1]
            sz = sd2[i, 2]
            sim2v[i, 0] = Rmv[0, 0] * sx + Rmv[0, 1] * sy + Rmv[0, 2] * sz + tmv[0]
            sim2v[i, 1] = Rmv[1, 0] * sx + Rmv[1, 1] * sy + Rmv[1, 2] * sz + tmv[1]
            sim2v[i, 2] = Rmv[2, 0] * sx + Rmv[2, 1] * sy + Rmv[2, 2] * sz + tmv[2]
            for j in range(3):
                sim1v[i, j] = sd1[i, j]
                simv[i, j] = sim1v[i, j] - sim2v[i, j]
        if n == 1:
            lamv[0] = 1.0
        elif n == 2:
            _s1d(
                simv[0, 0], simv[0, 1], simv[0, 2],
                simv[1, 0], simv[1, 1], simv[1, 2],
                lamv,
            )
        elif n == 3:
            _s2d(
                simv[0, 0], simv[0, 1], simv[0, 2],
                simv[1, 0], simv[1, 1], simv[1, 2],
                simv[2, 0], simv[2, 1], simv[2, 2],
                lamv,
            )
        else:
            _s3d(simv, lamv)
        j = 0
        for i in range(n):
            if lamv[i] > 0.0:
                if j != i:
                    simv[j, 0] = simv[i, 0]
                    simv[j, 1] = simv[i, 1]
                    simv[j, 2] = simv[i, 2]
                    sim1v[j, 0] = sim1v[i, 0]
                    sim1v[j, 1] = sim1v[i, 1]
                    sim1v[j, 2] = sim1v[i, 2]
                    sim2v[j, 0] = sim2v[i, 0]
                    sim2v[j, 1] = sim2v[i, 1]
                    sim2v[j, 2] = sim2v[i, 2]
                    lamv[j] = lamv[i]
                else:
                    lamv[j] = lamv[i]
                j += 1
        n = j
        if n > 0:
            xv[0] = 0.0
            xv[1] = 0.0
            xv[2] = 0.0
            for i in range(n):
                xv[0] += lamv[i] * simv[i, 0]
                xv[1] += lamv[i] * simv[i, 1]
                xv[2] += lamv[i] * simv[i, 2]

    converged: cython.int = 0
    origin_hit: cython.int = 0
    for it in range(maxit):
        xx = xv[0] * xv[0] + xv[1] * xv[1] + xv[2] * xv[2]
        if xx < 1e-24:
            # origin reached: on or inside the Minkowski-difference boundary
            origin_hit = 1
            break
        _support_mink(
            k1, p1mv, V1mv, k2, p2mv, V2mv, Rmv, tmv, -xv[0], -xv[1], -xv[2], sp1v, sp2v
        )
        sx = sp1v[0] - sp2v[0]
        sy = sp1v[1] - sp2v[1]
        sz = sp1v[2] - sp2v[2]
        xs = xv[0] * sx + xv[1] * sy + xv[2] * sz
        gap = xx - xs
        if gap <= gtol * (1.0 if xx < 1.0 else sqrt(xx)) and n > 0:
            # n == 0 only on a warm start that is already optimal; insert the
            # support point anyway so witnesses can be decomposed
            converged = 1
            break
        # no progress when the support point is already in the simplex
        dup = 0
        for i in range(n):
            if (
                fabs(simv[i, 0] - sx) < 1e-14
                and fabs(simv[i, 1] - sy) < 1e-14
                and fabs(simv[i, 2] - sz) < 1e-14
            ):
                dup = 1
                break
        if dup:
            converged = 1
            break
        simv[n, 0] = sx
        simv[n, 1] = sy
        simv[n, 2] = sz
        for j in range(3):
            sim1v[n, j] = sp1v[j]
            sim2v[n, j] = sp2v[j]
        n += 1
        if n == 1:
            lamv[0] = 1.0
        elif n == 2:
            _s1d(
                simv[0, 0], simv[0, 1], simv[0, 2],
                simv[1, 0], simv[1, 1], simv[1, 2],
                lamv,
            )
        elif n == 3:
            _s2d(
                simv[0, 0], simv[0, 1], simv[0, 2],
                simv[1, 0], simv[1, 1], simv[1, 2],
                simv[2, 0], simv[2, 1], simv[2, 2],
                lamv,
            )
        else:
            _s3d(simv, lamv)
        # drop vertices with zero weight
        j = 0
        for i in range(n):
            if lamv[i] > 0.0:
                if j != i:
                    simv[j, 0] = simv[i, 0]
                    simv[j, 1] = simv[i, 1]
                    simv[j, 2] = simv[i, 2]
                    sim1v[j, 0] = sim1v[i, 0]
                    sim1v[j, 1] = sim1v[i, 1]
                    sim1v[j, 2] = sim1v[i, 2]
                    sim2v[j, 0] = sim2v[i, 0]
                    sim2v[j, 1] = sim2v[i, 1]
                    sim2v[j, 2] = sim2v[i, 2]
                    lamv[j] = lamv[i]
                else:
                    lamv[j] = lamv[i]
                j += 1
        n = j
        if n == 0:
            flags |= FLAG_DEGENERATE
            break
        xv[0] = 0.0
        xv[1] = 0.0
        xv[2] = 0.0
        for i in range(n):
            xv[0] += lamv[i] * simv[i, 0]
            xv[1] += lamv[i] * simv[i, 1]
            xv[2] += lamv[i] * simv[i, 2]
        if n == 4:
            colliding = 1
            break
    else:
        flags |= FLAG_MAX_ITERATIONS

    gjk_iters: cython.int = it + 1
    epa_iters: cython.int = 0
    dist: cython.double
    ux: cython.double
    uy: cython.double
    uz: cython.double
    ax_: cython.double
    ay_: cython.double
    az_: cython.double
    bxx: cython.double
    byy: cython.double
    bzz: cython.double
    vol: cython.double
    cand: cython.int
    accepted: cython.int

    if origin_hit and n >= 2 and not colliding:
        # the iterate landed on the origin inside a sub-tetrahedron simplex:
        # complete it with orthogonal support directions so EPA can be seeded
        dirs = np.empty((4, 3))
        dmvx: cython.double[:, ::1] = dirs
        while n < 4:
            if n == 2:
                ux = simv[1, 0] - simv[0, 0]
                uy = simv[1, 1] - simv[0, 1]
                uz = simv[1, 2] - simv[0, 2]
                # two directions orthogonal to the segment, and their negatives
                if fabs(ux) <= fabs(uy) and fabs(ux) <= fabs(uz):
                    ax_ = 0.0
                    ay_ = -uz
                    az_ = uy
                elif fabs(uy) <= fabs(uz):
                    ax_ = uz
                    ay_ = 0.0
                    az_ = -ux
                else:
                    ax_ = -uy
                    ay_ = ux
                    az_ = 0.0
                bxx = uy * az_ - uz * ay_
                byy = uz * ax_ - ux * az_
                bzz = ux * ay_ - uy * ax_
                dmvx[0, 0] = ax_
                dmvx[0, 1] = ay_
                dmvx[0, 2] = az_
                dmvx[1, 0] = -ax_
                dmvx[1, 1] = -ay_
                dmvx[1, 2] = -az_
                dmvx[2, 0] = bxx
                dmvx[2, 1] = byy
                dmvx[2, 2] = bzz
                dmvx[3, 0] = -bxx
                dmvx[3, 1] = -byy
                dmvx[3, 2] = -bzz
            else:
                # triangle normal, both orientations
                ux = simv[1, 0] - simv[0, 0]
                uy = simv[1, 1] - simv[0, 1]
                uz = simv[1, 2] - simv[0, 2]
                ax_ = simv[2, 0] - simv[0, 0]
                ay_ = simv[2, 1] - simv[0, 1]
                az_ = simv[2, 2] - simv[0, 2]
                bxx = uy * az_ - uz * ay_
                byy = uz * ax_ - ux * az_
                bzz = ux * ay_ - uy * ax_
                dmvx[0, 0] = bxx
                dmvx[0, 1] = byy
                dmvx[0, 2] = bzz
                dmvx[1, 0] = -bxx
                dmvx[1, 1] = -byy
                dmvx[1, 2] = -bzz
                dmvx[2, 0] = bxx
                dmvx[2, 1] = byy
                dmvx[2, 2] = bzz
                dmvx[3, 0] = -bxx
                dmvx[3, 1] = -byy
                dmvx[3, 2] = -bzz
            accepted = 0
            for cand in range(4):
                sx = dmvx[cand, 0]
                sy = dmvx[cand, 1]
                sz = dmvx[cand, 2]
                gap = sqrt(sx * sx + sy * sy + sz * sz)
                if gap < 1e-300:
                    continue
                _support_mink(
                    k1, p1mv, V1mv, k2, p2mv, V2mv, Rmv, tmv,
                    sx / gap, sy / gap, sz / gap, sp1v, sp2v,
                )
                sx = sp1v[0] - sp2v[0]
                sy = sp1v[1] - sp2v[1]
                sz = sp1v[2] - sp2v[2]
                if n == 2:
                    # affine independence: triangle area
                    ux = simv[1, 0] - simv[0, 0]
                    uy = simv[1, 1] - simv[0, 1]
                    uz = simv[1, 2] - simv[0, 2]
                    ax_ = sx - simv[0, 0]
                    ay_ = sy - simv[0, 1]
                    az_ = sz - simv[0, 2]
                    bxx = uy * az_ - uz * ay_
                    byy = uz * ax_ - ux * az_
                    bzz = ux * ay_ - uy * ax_
                    vol = sqrt(bxx * bxx + byy * byy + bzz * bzz)
                else:
                    # tetra volume
                    ux = simv[1, 0] - simv[0, 0]
                    uy = simv[1, 1] - simv[0, 1]
                    uz = simv[1, 2] - simv[0, 2]
                    ax_ = simv[2, 0] - simv[0, 0]
                    ay_ = simv[2, 1] - simv[0, 1]
                    az_ = simv[2, 2] - simv[0, 2]
                    bxx = uy * az_ - uz * ay_
                    byy = uz * ax_ - ux * az_
                    bzz = ux * ay_ - uy * ax_
                    vol = fabs(
                        bxx * (sx - simv[0, 0])
                        + byy * (sy - simv[0, 1])
                        + bzz * (sz - simv[0, 2])
                    )
                if vol > 1e-12:
                    simv[n, 0] = sx
                    simv[n, 1] = sy
                    simv[n, 2] = sz
                    for j in range(3):
                        sim1v[n, j] = sp1v[j]
                        sim2v[n, j] = sp2v[j]
                    n += 1
                    accepted = 1
                    break
            if not accepted:
                break
        if n == 4:
            colliding = 1
        else:
            flags |= FLAG_DEGENERATE

    for i in range(4):
        for j in range(3):
            sout[i, j] = simv[i, j] if i < n else 0.0
            so1[i, j] = sim1v[i, j] if i < n else 0.0
    for i in range(4):
        if i < n:
            sx = sim2v[i, 0] - tmv[0]
            sy = sim2v[i, 1] - tmv[1]
            sz = sim2v[i, 2] - tmv[2]
            so2[i, 0] = Rmv[0, 0] * sx + Rmv[1, 0] * sy + Rmv[2, 0] * sz
            so2[i, 1] = Rmv[0, 1] * sx + Rmv[1, 1] * sy + Rmv[2, 1] * sz
            so2[i, 2] = Rmv[0, 2] * sx + Rmv[1, 2] * sy + Rmv[2, 2] * sz
        else:
            so2[i, 0] = 0.0
            so2[i, 1] = 0.0
            so2[i, 2] = 0.0

    if colliding and not do_epa:
        # caller only wants the enclosing simplex (gjk-only query)
        for j in range(3):
            w1[j] = 0.0
            w2[j] = 0.0
            w2l[j] = 0.0
        return 0.0, 1, gjk_iters, 0, flags, n

    if colliding:
        depth_flags = _epa(
            k1, p1mv, V1mv, k2, p2mv, V2mv, Rmv, tmv,
            sim1, sim2, epa_tol, epa_max_faces, w1out, w2out,
        )
        dist = depth_flags[0]
        epa_iters = depth_flags[1]
        flags |= depth_flags[2]
        xv[0] = w1[0] - w2[0]
        xv[1] = w1[1] - w2[1]
        xv[2] = w1[2] - w2[2]
    else:
        w1[0] = 0.0
        w1[1] = 0.0
        w1[2] = 0.0
        w2[0] = 0.0
        w2[1] = 0.0
        w2[2] = 0.0
        for i in range(n):
            for j in range(3):
                w1[j] += lamv[i] * sim1v[i, j]
                w2[j] += lamv[i] * sim2v[i, j]
        xv[0] = w1[0] - w2[0]
        xv[1] = w1[1] - w2[1]
        xv[2] = w1[2] - w2[2]
        dist = sqrt(xv[0] * xv[0] + xv[1] * xv[1] + xv[2] * xv[2])

    if do_polish and (k1 == SPHERE or k1 == ELLIPSOID) and (k2 == SPHERE or k2 == ELLIPSOID):
        if dist > 1e-9:  # the stationarity equation degenerates at contact
            if _polish_smooth(k1, p1mv, k2, p2mv, Rmv, tmv, colliding, xv, w1, w2):
                dist = sqrt(xv[0] * xv[0] + xv[1] * xv[1] + xv[2] * xv[2])
            else:
                flags |= FLAG_POLISH_FAILED

    # witness on shape 2 in its local frame
    sx = w2[0] - tmv[0]
    sy = w2[1] - tmv[1]
    sz = w2[2] - tmv[2]
    w2l[0] = Rmv[0, 0] * sx + Rmv[1, 0] * sy + Rmv[2, 0] * sz
    w2l[1] = Rmv[0, 1] * sx + Rmv[1, 1] * sy + Rmv[2, 1] * sz
    w2l[2] = Rmv[0, 2] * sx + Rmv[1, 2] * sy + Rmv[2, 2] * sz

    return dist, colliding, gjk_iters, epa_iters, flags, n


@cython.cfunc
def _epa(
    kind1: cython.int, params1: cython.double[::1], V1: cython.double[:, ::1],
    kind2: cython.int, params2: cython.double[::1], V2: cython.double[:, ::1],
    R: cython.double[:, ::1], t: cython.double[::1],
    sim1, sim2,
    epa_tol: cython.double, max_faces: cython.int,
    w1out, w2out,
):
    """Expanding-polytope penetration depth from a tetrahedron seed.

    sim1/sim2 are (4, 3) arrays of the seed's witness decomposition.  Returns
    (depth, iterations, flags) and writes witnesses.
    """
    max_verts: cython.int = max_faces // 2 + 8
    verts = np.empty((max_verts, 3))
    verts1 = np.empty((max_verts, 3))
    verts2 = np.empty((max_verts, 3))
    fidx = np.empty((max_faces, 3), dtype=np.int32)
    fnrm = np.empty((max_faces, 3))
    fdist = np.empty(max_faces)
    alive = np.zeros(max_faces, dtype=np.int32)
    edges = np.empty((max_faces * 3, 2), dtype=np.int32)
    vv: cython.double[:, ::1] = verts
    v1: cython.double[:, ::1] = verts1
    v2: cython.double[:, ::1] = verts2
    fi: cython.int[:, ::1] = fidx
    fn: cython.double[:, ::1] = fnrm
    fd: cython.double[::1] = fdist
    al: cython.int[::1] = alive
    ed: cython.int[:, ::1] = edges
    s1mv: cython.double[:, ::1] = sim1
    s2mv: cython.double[:, ::1] = sim2
    sp1 = np.empty(3)
    sp2 = np.empty(3)
    sp1v: cython.double[::1] = sp1
    sp2v: cython.double[::1] = sp2

    i: cython.int
    j: cython.int
    k: cython.int
    nv: cython.int = 4
    nf: cython.int = 0
    flags: cython.int = 0
    icx: cython.double = 0.0
    icy: cython.double = 0.0
    icz: cython.double = 0.0

    for i in range(4):
        for j in range(3):
            vv[i, j] = s1mv[i, j] - s2mv[i, j]
            v1[i, j] = s1mv[i, j]
            v2[i, j] = s2mv[i, j]
        icx += vv[i, 0]
        icy += vv[i, 1]
        icz += vv[i, 2]
    icx *= 0.25
    icy *= 0.25
    icz *= 0.25

    nf = _epa_add_face(vv, fi, fn, fd, al, nf, 0, 1, 2, icx, icy, icz)
    nf = _epa_add_face(vv, fi, fn, fd, al, nf, 0, 1, 3, icx, icy, icz)
    nf = _epa_add_face(vv, fi, fn, fd, al, nf, 0, 2, 3, icx, icy, icz)
    nf = _epa_add_face(vv, fi, fn, fd, al, nf, 1, 2, 3, icx, icy, icz)

    best: cython.int
    bd: cython.double
    gx: cython.double
    gy: cython.double
    gz: cython.double
    growth: cython.double
    ne: cython.int
    it: cython.int = 0
    a: cython.int
    b: cython.int
    dup: cython.int

    for it in range(max_faces):
        best = -1
        bd = 1e300
        for i in range(nf):
            if al[i] and fd[i] < bd:
                bd = fd[i]
                best = i
        if best < 0:
            flags |= FLAG_DEGENERATE
            break
        gx = fn[best, 0]
        gy = fn[best, 1]
        gz = fn[best, 2]
        _support_mink(
            kind1, params1, V1, kind2, params2, V2, R, t, gx, gy, gz, sp1v, sp2v
        )
        growth = (
            gx * (sp1v[0] - sp2v[0])
            + gy * (sp1v[1] - sp2v[1])
            + gz * (sp1v[2] - sp2v[2])
            - bd
        )
        if growth <= epa_tol:
            break
        if nv >= max_verts:
            flags |= FLAG_MAX_FACES
            break
        for j in range(3):
            v1[nv, j] = sp1v[j]
            v2[nv, j] = sp2v[j]
            vv[nv, j] = sp1v[j] - sp2v[j]
        # collect the horizon of faces visible from the new vertex
        ne = 0
        for i in range(nf):
            if not al[i]:
                continue
            if (
                fn[i, 0] * vv[nv, 0] + fn[i, 1] * vv[nv, 1] + fn[i, 2] * vv[nv, 2]
                > fd[i] + 1e-12
            ):
                al[i] = 0
                for j in range(3):
                    a = fi[i, j]
                    b = fi[i, (j + 1) % 3]
                    # a shared edge appears twice in opposite orientation
                    dup = 0
                    for k in range(ne):
                        if ed[k, 0] == b and ed[k, 1] == a:
                            ed[k, 0] = ed[ne - 1, 0]
                            ed[k, 1] = ed[ne - 1, 1]
                            ne -= 1
                            dup = 1
                            break
                    if not dup:
                        ed[ne, 0] = a
                        ed[ne, 1] = b
                        ne += 1
        if ne == 0 or nf + ne > max_faces:
            flags |= FLAG_MAX_FACES if ne > 0 else FLAG_DEGENERATE
            break
        for k in range(ne):
            nf = _epa_add_face(vv, fi, fn, fd, al, nf, ed[k, 0], ed[k, 1], nv, icx, icy, icz)
        nv += 1
    else:
        flags |= FLAG_MAX_FACES

    # nearest face: project the origin onto it and combine the witnesses
    best = -1
    bd = 1e300
    for i in range(nf):
        if al[i] and fd[i] < bd:
            bd = fd[i]
            best = i
    if best < 0:
        w1out[0] = w1out[1] = w1out[2] = 0.0
        w2out[0] = w2out[1] = w2out[2] = 0.0
        return 0.0, it + 1, flags | FLAG_DEGENERATE

    la = np.empty(3)
    lav: cython.double[::1] = la
    px: cython.double = fn[best, 0] * fd[best]
    py: cython.double = fn[best, 1] * fd[best]
    pz: cython.double = fn[best, 2] * fd[best]
    ia: cython.int = fi[best, 0]
    ib: cython.int = fi[best, 1]
    ic: cython.int = fi[best, 2]
    _tri_affine(
        vv[ia, 0], vv[ia, 1], vv[ia, 2],
        vv[ib, 0], vv[ib, 1], vv[ib, 2],
        vv[ic, 0], vv[ic, 1], vv[ic, 2],
        px, py, pz, lav,
    )
    w1o: cython.double[::1] = w1out
    w2o: cython.double[::1] = w2out
    for j in range(3):
        w1o[j] = lav[0] * v1[ia, j] + lav[1] * v1[ib, j] + lav[2] * v1[ic, j]
        w2o[j] = lav[0] * v2[ia, j] + lav[1] * v2[ib, j] + lav[2] * v2[ic, j]
    depth: cython.double = sqrt(
        (w1o[0] - w2o[0]) ** 2 + (w1o[1] - w2o[1]) ** 2 + (w1o[2] - w2o[2]) ** 2
    )
    return depth, it + 1, flags


@cython.cfunc
def _epa_add_face(
    vv: cython.double[:, ::1],
    fi: cython.int[:, ::1],
    fn: cython.double[:, ::1],
    fd: cython.double[::1],
    al: cython.int[::1],
    nf: cython.int,
    a: cython.int, b: cython.int, c: cython.int,
    icx: cython.double, icy: cython.double, icz: cython.double,
) -> cython.int:
    """Append an outward-oriented face; degenerate faces are stored dead."""
    e1x: cython.double = vv[b, 0] - vv[a, 0]
    e1y: cython.double = vv[b, 1] - vv[a, 1]
    e1z: cython.double = vv[b, 2] - vv[a, 2]
    e2x: cython.double = vv[c, 0] - vv[a, 0]
    e2y: cython.double = vv[c, 1] - vv[a, 1]
    e2z: cython.double = vv[c, 2] - vv[a, 2]
    nx: cython.double = e1y * e2z - e1z * e2y
    ny: cython.double = e1z * e2x - e1x * e2z
    nz: cython.double = e1x * e2y - e1y * e2x
    nn: cython.double = sqrt(nx * nx + ny * ny + nz * nz)
    fi[nf, 0] = a
    fi[nf, 1] = b
    fi[nf, 2] = c
    if nn < 1e-300:
        al[nf] = 0
        fd[nf] = 1e300
        fn[nf, 0] = fn[nf, 1] = fn[nf, 2] = 0.0
        return nf + 1
    nx /= nn
    ny /= nn
    nz /= nn
    # orient away from the interior point
    if nx * (vv[a, 0] - icx) + ny * (vv[a, 1] - icy) + nz * (vv[a, 2] - icz) < 0.0:
        nx = -nx
        ny = -ny
        nz = -nz
        fi[nf, 1] = c
        fi[nf, 2] = b
    fn[nf, 0] = nx
    fn[nf, 1] = ny
    fn[nf, 2] = nz
    fd[nf] = nx * vv[a, 0] + ny * vv[a, 1] + nz * vv[a, 2]
    al[nf] = 1
    return nf + 1


@cython.cfunc
def _tri_affine(
    ax: cython.double, ay: cython.double, az: cython.double,
    bx: cython.double, by: cython.double, bz: cython.double,
    cx: cython.double, cy: cython.double, cz: cython.double,
    px: cython.double, py: cython.double, pz: cython.double,
    lam: cython.double[::1],
) -> cython.void:
    """Affine coordinates of p (assumed in the plane) w.r.t. triangle abc."""
    m1: cython.double = (
        by * cz - bz * cy - ay * cz + az * cy + ay * bz - az * by
    )
    m2: cython.double = (
        bx * cz - bz * cx - ax * cz + az * cx + ax * bz - az * bx
    )
    m3: cython.double = (
        bx * cy - by * cx - ax * cy + ay * cx + ax * by - ay * bx
    )
    mmax: cython.double
    pu: cython.double
    pv: cython.double
    au: cython.double
    av: cython.double
    bu: cython.double
    bv: cython.double
    cu: cython.double
    cv: cython.double
    if fabs(m1) >= fabs(m2) and fabs(m1) >= fabs(m3):
        mmax = m1
        au = ay; av = az; bu = by; bv = bz; cu = cy; cv = cz; pu = py; pv = pz
    elif fabs(m2) >= fabs(m3):
        mmax = m2
        au = ax; av = az; bu = bx; bv = bz; cu = cx; cv = cz; pu = px; pv = pz
    else:
        mmax = m3
        au = ax; av = ay; bu = bx; bv = by; cu = cx; cv = cy; pu = px; pv = py
    if mmax == 0.0:
        lam[0] = 1.0
        lam[1] = 0.0
        lam[2] = 0.0
        return
    lam[0] = (pu * bv + pv * cu + bu * cv - pu * cv - pv * bu - cu * bv) / mmax
    lam[1] = (pu * cv + pv * au + cu * av - pu * av - pv * cu - au * cv) / mmax
    lam[2] = (pu * av + pv * bu + au * bv - pu * bv - pv * au - bu * av) / mmax


# ---------------------------------------------------------------------------
# support-function Hessian estimators
# ---------------------------------------------------------------------------


def gumbel_hessian(V, indptr, indices, d, eps, depth, H, work):
    """Closed-form smoothed Hessian of a mesh support function.

    The argmax over vertex scores is smoothed with Gumbel noise of temperature
    eps, restricted to the graph ball of the given depth around the argmax
    vertex.  work is an int32 scratch array of length >= 2 * n_vertices.
    Returns the argmax vertex index.
    """
    Vmv: cython.double[:, ::1] = V
    ip: cython.int[::1] = indptr
    ix: cython.int[::1] = indices
    dmv: cython.double[::1] = d
    Hmv: cython.double[:, ::1] = H
    wk: cython.int[::1] = work
    tmp: cython.double = eps
    nl: cython.int = depth

    n: cython.Py_ssize_t = Vmv.shape[0]
    i: cython.Py_ssize_t
    j: cython.Py_ssize_t
    k: cython.Py_ssize_t
    best: cython.Py_ssize_t = 0
    sc: cython.double
    zmax: cython.double = Vmv[0, 0] * dmv[0] + Vmv[0, 1] * dmv[1] + Vmv[0, 2] * dmv[2]
    for i in range(1, n):
        sc = Vmv[i, 0] * dmv[0] + Vmv[i, 1] * dmv[1] + Vmv[i, 2] * dmv[2]
        if sc > zmax:
            zmax = sc
            best = i

    # BFS ball of radius nl around the argmax vertex; wk[:n] marks visited,
    # wk[n:] is the queue (already in ascending discovery order per level)
    for i in range(n):
        wk[i] = 0
    qlen: cython.Py_ssize_t = 1
    qpos: cython.Py_ssize_t = 0
    wk[n] = cython.cast(cython.int, best)
    wk[best] = 1
    lvl: cython.int = 0
    lvl_end: cython.Py_ssize_t = 1
    v: cython.int
    u: cython.int
    while qpos < qlen:
        if qpos == lvl_end:
            lvl += 1
            lvl_end = qlen
        if lvl >= nl:
            qpos = qlen
            break
        v = wk[n + qpos]
        qpos += 1
        for j in range(ip[v], ip[v + 1]):
            u = ix[j]
            if not wk[u]:
                wk[u] = 1
                wk[n + qlen] = u
                qlen += 1

    # softmax over the neighbourhood (shift by the max for overflow safety)
    asum: cython.double = 0.0
    ux: cython.double = 0.0
    uy: cython.double = 0.0
    uz: cython.double = 0.0
    h00: cython.double = 0.0
    h01: cython.double = 0.0
    h02: cython.double = 0.0
    h11: cython.double = 0.0
    h12: cython.double = 0.0
    h22: cython.double = 0.0
    w: cython.double
    for k in range(qlen):
        v = wk[n + k]
        sc = Vmv[v, 0] * dmv[0] + Vmv[v, 1] * dmv[1] + Vmv[v, 2] * dmv[2]
        asum += c_exp((sc - zmax) / tmp)
    for k in range(qlen):
        v = wk[n + k]
        sc = Vmv[v, 0] * dmv[0] + Vmv[v, 1] * dmv[1] + Vmv[v, 2] * dmv[2]
        w = c_exp((sc - zmax) / tmp) / asum
        ux += w * Vmv[v, 0]
        uy += w * Vmv[v, 1]
        uz += w * Vmv[v, 2]
        h00 += w * Vmv[v, 0] * Vmv[v, 0]
        h01 += w * Vmv[v, 0] * Vmv[v, 1]
        h02 += w * Vmv[v, 0] * Vmv[v, 2]
        h11 += w * Vmv[v, 1] * Vmv[v, 1]
        h12 += w * Vmv[v, 1] * Vmv[v, 2]
        h22 += w * Vmv[v, 2] * Vmv[v, 2]
    # H = (sum_i a_i v_i v_i^T - u u^T) / eps  with u = sum_i a_i v_i
    Hmv[0, 0] = (h00 - ux * ux) / tmp
    Hmv[0, 1] = (h01 - ux * uy) / tmp
    Hmv[0, 2] = (h02 - ux * uz) / tmp
    Hmv[1, 0] = Hmv[0, 1]
    Hmv[1, 1] = (h11 - uy * uy) / tmp
    Hmv[1, 2] = (h12 - uy * uz) / tmp
    Hmv[2, 0] = Hmv[0, 2]
    Hmv[2, 1] = Hmv[1, 2]
    Hmv[2, 2] = (h22 - uz * uz) / tmp
    return best


def gaussian_hessian(kind, params, V, d, eps, Z, H):
    """Monte-Carlo smoothed Hessian of a support function.

    Z is an (M, 3) array of standard-normal samples; the unperturbed support
    gradient is subtracted as a control variate and the result symmetrized.
    """
    k: cython.int = kind
    pmv: cython.double[::1] = params
    Vmv: cython.double[:, ::1] = V
    dmv: cython.double[::1] = d
    Zmv: cython.double[:, ::1] = Z
    Hmv: cython.double[:, ::1] = H
    e: cython.double = eps

    g0 = np.empty(3)
    g = np.empty(3)
    g0v: cython.double[::1] = g0
    gv: cython.double[::1] = g
    _support(k, pmv, Vmv, dmv[0], dmv[1], dmv[2], g0v)

    m: cython.Py_ssize_t = Zmv.shape[0]
    i: cython.Py_ssize_t
    r: cython.Py_ssize_t
    c: cython.Py_ssize_t
    acc = np.zeros((3, 3))
    amv: cython.double[:, ::1] = acc
    for i in range(m):
        _support(
            k, pmv, Vmv,
            dmv[0] + e * Zmv[i, 0],
            dmv[1] + e * Zmv[i, 1],
            dmv[2] + e * Zmv[i, 2],
            gv,
        )
        for r in range(3):
            for c in range(3):
                amv[r, c] += (gv[r] - g0v[r]) * Zmv[i, c]
    sc: cython.double = 1.0 / (e * m)
    for r in range(3):
        for c in range(r, 3):
            Hmv[r, c] = 0.5 * (amv[r, c] + amv[c, r]) * sc
            Hmv[c, r] = Hmv[r, c]


# ---------------------------------------------------------------------------
# first-order system assembly and solve
# ---------------------------------------------------------------------------

BACKEND_ANALYTIC = 0
BACKEND_GAUSSIAN = 1
BACKEND_GUMBEL = 2


@cython.cfunc
def _backend_hessian(
    code: cython.int,
    kind: cython.int, params: cython.double[::1], V: cython.double[:, ::1],
    ip: cython.int[::1], ix: cython.int[::1],
    d, eps: cython.double, depth: cython.int, Z,
    H, work,
) -> cython.int:
    if code == BACKEND_ANALYTIC:
        dv: cython.double[::1] = d
        Hv: cython.double[:, ::1] = H
        return _analytic_hessian(kind, params, dv[0], dv[1], dv[2], Hv)
    if code == BACKEND_GUMBEL:
        gumbel_hessian(V, np.asarray(ip), np.asarray(ix), d, eps, depth, H, work)
        return 1
    gaussian_hessian(kind, params, V, d, eps, Z, H)
    return 1


def first_order_kernel(
    kind1, params1, V1, ip1, ix1,
    kind2, params2, V2, ip2, ix2,
    R, t, xstar, w2local, colliding,
    b1, eps1, depth1, Z1,
    b2, eps2, depth2, Z2,
    H1, H2, A, B, dsep, dw1, dw2, work,
):
    """Witness Jacobians by implicit differentiation of the stationarity
    equation at the converged separation vector.

    Outputs are written to H1, H2 (support Hessians), A (3x3 system), B (3x6
    right-hand side), and the three 3x6 Jacobians.  work is an int32 scratch
    array of length >= 2 * max(n_vertices).  Returns (regularization, flags).
    """
    Rmv: cython.double[:, ::1] = R
    tmv: cython.double[::1] = t
    xv: cython.double[::1] = xstar
    w2lv: cython.double[::1] = w2local
    H1v: cython.double[:, ::1] = H1
    H2v: cython.double[:, ::1] = H2
    Av: cython.double[:, ::1] = A
    Bv: cython.double[:, ::1] = B
    dsv: cython.double[:, ::1] = dsep
    d1v: cython.double[:, ::1] = dw1
    d2v: cython.double[:, ::1] = dw2
    col: cython.int = colliding
    sgn: cython.double = -1.0 if col == 0 else 1.0  # H1 argument sign vs x*

    i: cython.int
    j: cython.int
    k: cython.int
    acc: cython.double

    d1 = np.empty(3)
    d2 = np.empty(3)
    d1mv: cython.double[::1] = d1
    d2mv: cython.double[::1] = d2
    # H1 at -x* (separated) / +x* (penetrating); H2 at the local argument
    for i in range(3):
        d1mv[i] = sgn * xv[i]
    for i in range(3):
        d2mv[i] = -sgn * (
            Rmv[0, i] * xv[0] + Rmv[1, i] * xv[1] + Rmv[2, i] * xv[2]
        )

    flags: cython.int = 0
    if not _backend_hessian(
        b1, kind1, params1, V1, ip1, ix1, d1, eps1, depth1, Z1, H1, work
    ):
        return -1.0, FLAG_SINGULAR
    if not _backend_hessian(
        b2, kind2, params2, V2, ip2, ix2, d2, eps2, depth2, Z2, H2, work
    ):
        return -1.0, FLAG_SINGULAR

    # A = I - sgn * (H1 + R H2 R^T)
    RH = np.empty((3, 3))
    RHmv: cython.double[:, ::1] = RH
    for i in range(3):
        for j in range(3):
            acc = 0.0
            for k in range(3):
                acc += Rmv[i, k] * H2v[k, j]
            RHmv[i, j] = acc
    for i in range(3):
        for j in range(3):
            acc = 0.0
            for k in range(3):
                acc += RHmv[i, k] * Rmv[j, k]
            Av[i, j] = -sgn * (H1v[i, j] + acc)
        Av[i, i] += 1.0

    # B: translation block R; rotation block -R [s2l]x - sgn * R H2 [R^T x*]x
    s2l0: cython.double = w2lv[0]
    s2l1: cython.double = w2lv[1]
    s2l2: cython.double = w2lv[2]
    y0: cython.double = Rmv[0, 0] * xv[0] + Rmv[1, 0] * xv[1] + Rmv[2, 0] * xv[2]
    y1: cython.double = Rmv[0, 1] * xv[0] + Rmv[1, 1] * xv[1] + Rmv[2, 1] * xv[2]
    y2: cython.double = Rmv[0, 2] * xv[0] + Rmv[1, 2] * xv[1] + Rmv[2, 2] * xv[2]
    M = np.empty((3, 3))
    Mmv: cython.double[:, ::1] = M
    # M = [s2l]x + sgn * H2 [y]x  (columns of [v]x: [v]x e_j)
    # [v]x = [[0,-vz,vy],[vz,0,-vx],[-vy,vx,0]]
    Mmv[0, 0] = 0.0
    Mmv[0, 1] = -s2l2
    Mmv[0, 2] = s2l1
    Mmv[1, 0] = s2l2
    Mmv[1, 1] = 0.0
    Mmv[1, 2] = -s2l0
    Mmv[2, 0] = -s2l1
    Mmv[2, 1] = s2l0
    Mmv[2, 2] = 0.0
    Ycross = np.empty((3, 3))
    Ymv: cython.double[:, ::1] = Ycross
    Ymv[0, 0] = 0.0
    Ymv[0, 1] = -y2
    Ymv[0, 2] = y1
    Ymv[1, 0] = y2
    Ymv[1, 1] = 0.0
    Ymv[1, 2] = -y0
    Ymv[2, 0] = -y1
    Ymv[2, 1] = y0
    Ymv[2, 2] = 0.0
    for i in range(3):
        for j in range(3):
            acc = 0.0
            for k in range(3):
                acc += H2v[i, k] * Ymv[k, j]
            Mmv[i, j] += sgn * acc
    for i in range(3):
        for j in range(3):
            Bv[i, j] = Rmv[i, j]
            acc = 0.0
            for k in range(3):
                acc += Rmv[i, k] * Mmv[k, j]
            Bv[i, j + 3] = -acc

    # solve (A + lam I) dsep = -B column by column, escalating lam on
    # ill-conditioning
    Areg = np.empty((3, 3))
    Ar: cython.double[:, ::1] = Areg
    colbuf = np.empty(3)
    cb: cython.double[::1] = colbuf
    lam: cython.double = 0.0
    ok: cython.int = 0
    trial: cython.int
    anorm: cython.double
    inorm: cython.double
    inv = np.empty((3, 3))
    invv: cython.double[:, ::1] = inv
    e0: cython.double
    e1: cython.double
    e2: cython.double
    for trial in range(8):
        for i in range(3):
            for j in range(3):
                Ar[i, j] = Av[i, j]
            Ar[i, i] += lam
        # explicit inverse for the condition estimate
        ok = 1
        for j in range(3):
            e0 = 1.0 if j == 0 else 0.0
            e1 = 1.0 if j == 1 else 0.0
            e2 = 1.0 if j == 2 else 0.0
            if _solve3(Ar, e0, e1, e2, cb) == 0:
                ok = 0
                break
            invv[0, j] = cb[0]
            invv[1, j] = cb[1]
            invv[2, j] = cb[2]
        if ok:
            anorm = 0.0
            inorm = 0.0
            for i in range(3):
                for j in range(3):
                    anorm += Ar[i, j] * Ar[i, j]
                    inorm += invv[i, j] * invv[i, j]
            if sqrt(anorm) * sqrt(inorm) <= 1e12:
                break
            ok = 0
        lam = 1e-10 if lam == 0.0 else lam * 10.0
        if lam > 1e-4:
            break
    if not ok:
        flags |= FLAG_SINGULAR

    for j in range(6):
        for i in range(3):
            cb[i] = 0.0
        for i in range(3):
            for k in range(3):
                cb[i] += invv[i, k] * (-Bv[k, j])
        for i in range(3):
            dsv[i, j] = cb[i]

    # w1 = grad sigma_1(sgn x*), so dw1 = sgn * H1 dsep; dw2 = dw1 - dsep
    for i in range(3):
        for j in range(6):
            acc = 0.0
            for k in range(3):
                acc += H1v[i, k] * dsv[k, j]
            d1v[i, j] = sgn * acc
            d2v[i, j] = d1v[i, j] - dsv[i, j]

    return lam, flags
