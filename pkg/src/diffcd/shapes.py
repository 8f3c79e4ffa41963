"""Convex shape types, support functions, analytic support Hessians, and
convex-mesh construction with an edge-adjacency graph.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._core import kernels
from .errors import DegenerateInput, IndexOutOfRange, ZeroDirection

SPHERE = kernels.SPHERE
ELLIPSOID = kernels.ELLIPSOID
BOX = kernels.BOX
CAPSULE = kernels.CAPSULE
MESH = kernels.MESH

_EMPTY_VERTS = np.empty((0, 3))
_EMPTY_PARAMS = np.empty(0)
_EMPTY_ADJ = np.zeros(1, dtype=np.int32)
_EMPTY_IDX = np.empty(0, dtype=np.int32)


def _positive(name, value):
    if not np.all(np.asarray(value) > 0):
        raise DegenerateInput("%s must be positive, got %r" % (name, value))


@dataclass(frozen=True)
class Sphere:
    radius: float
    kind: int = field(default=SPHERE, init=False, repr=False)

    def __post_init__(self):
        _positive("radius", self.radius)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def params(self):
        return np.array([self.radius])


@dataclass(frozen=True)
class Ellipsoid:
    semi_axes: np.ndarray
    kind: int = field(default=ELLIPSOID, init=False, repr=False)

    def __post_init__(self):
        a = np.asarray(self.semi_axes, dtype=np.float64).reshape(3).copy()
        _positive("semi_axes", a)
        object.__setattr__(self, "semi_axes", a)

    @property
    def params(self):
        return self.semi_axes


@dataclass(frozen=True)
class Box:
    half_extents: np.ndarray
    kind: int = field(default=BOX, init=False, repr=False)

    def __post_init__(self):
        h = np.asarray(self.half_extents, dtype=np.float64).reshape(3).copy()
        _positive("half_extents", h)
        object.__setattr__(self, "half_extents", h)

    @property
    def params(self):
        return self.half_extents


@dataclass(frozen=True)
class Capsule:
    half_length: float
    radius: float
    kind: int = field(default=CAPSULE, init=False, repr=False)

    def __post_init__(self):
        _positive("half_length", self.half_length)
        _positive("radius", self.radius)
        object.__setattr__(self, "half_length", float(self.half_length))
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def params(self):
        return np.array([self.half_length, self.radius])


@dataclass(frozen=True)
class ConvexMesh:
    """Vertices in convex position plus their hull edge graph in CSR form."""

    vertices: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    kind: int = field(default=MESH, init=False, repr=False)

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != 3 or v.shape[0] < 4:
            raise DegenerateInput("mesh needs an (N>=4, 3) vertex array")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "indptr", np.ascontiguousarray(self.indptr, dtype=np.int32))
        object.__setattr__(self, "indices", np.ascontiguousarray(self.indices, dtype=np.int32))

    @property
    def params(self):
        return np.empty(0)

    def neighbors(self, i):
        return self.indices[self.indptr[i]:self.indptr[i + 1]]


ConvexShape = (Sphere, Ellipsoid, Box, Capsule, ConvexMesh)


def shape_arrays(shape):
    """(kind, params, vertices, indptr, indices) arrays for kernel calls."""
    if isinstance(shape, ConvexMesh):
        return shape.kind, _EMPTY_PARAMS, shape.vertices, shape.indptr, shape.indices
    return shape.kind, shape.params, _EMPTY_VERTS, _EMPTY_ADJ, _EMPTY_IDX


@dataclass(frozen=True)
class SupportResult:
    point: np.ndarray
    value: float
    vertex_index: Optional[int]


def _check_dir(d):
    d = np.ascontiguousarray(d, dtype=np.float64).reshape(3)
    if np.sqrt(d @ d) < 1e-15:
        raise ZeroDirection("support direction has near-zero norm")
    return d


def support(shape, direction) -> SupportResult:
    """Farthest point of the shape along a direction."""
    d = _check_dir(direction)
    kind, params, V, _, _ = shape_arrays(shape)
    out = np.empty(3)
    value, idx = kernels.support_point(kind, params, V, d, out)
    return SupportResult(out, float(value), int(idx) if idx >= 0 else None)


def support_hessian_analytic(shape, direction) -> Optional[np.ndarray]:
    """Exact Hessian of the support function, or None when the surface is
    piecewise linear (box, mesh) or has curvature jumps (capsule)."""
    d = _check_dir(direction)
    kind, params, V, _, _ = shape_arrays(shape)
    H = np.empty((3, 3))
    if kernels.analytic_hessian(kind, params, d, H):
        return H
    return None


def build_convex_mesh(vertices) -> ConvexMesh:
    """Convex hull of a point cloud with the hull edge graph.

    Triangulation diagonals inside coplanar facets are not edges and are
    excluded from the adjacency.
    """
    from scipy.spatial import ConvexHull, QhullError

    pts = np.asarray(vertices, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 4:
        raise DegenerateInput("need at least 4 points in R^3")
    try:
        hull = ConvexHull(pts)
    except QhullError as e:
        raise DegenerateInput("degenerate point set: %s" % str(e).splitlines()[0]) from None

    used = np.unique(hull.simplices)
    remap = -np.ones(pts.shape[0], dtype=np.int64)
    remap[used] = np.arange(used.size)
    verts = pts[used]
    tris = remap[hull.simplices]
    normals = hull.equations[:, :3]

    # an edge shared by two coplanar triangles is a triangulation diagonal
    edge_faces = {}
    for f, tri in enumerate(tris):
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            key = (min(a, b), max(a, b))
            edge_faces.setdefault(key, []).append(f)
    adj = [set() for _ in range(verts.shape[0])]
    for (a, b), faces in edge_faces.items():
        if len(faces) == 2:
            n1 = normals[faces[0]]
            n2 = normals[faces[1]]
            if abs(float(n1 @ n2)) > 1.0 - 1e-9 and float(n1 @ n2) > 0.0:
                continue  # coplanar neighbors: diagonal, not a hull edge
        adj[a].add(b)
        adj[b].add(a)

    indptr = np.zeros(verts.shape[0] + 1, dtype=np.int32)
    indices = []
    for i, nb in enumerate(adj):
        nb_sorted = sorted(nb)
        indices.extend(nb_sorted)
        indptr[i + 1] = indptr[i] + len(nb_sorted)
    return ConvexMesh(verts, indptr, np.asarray(indices, dtype=np.int32))


def neighbors_to_depth(mesh: ConvexMesh, seed_vertex, n_l) -> np.ndarray:
    """Vertex indices within graph distance n_l of a seed, ascending."""
    n = mesh.vertices.shape[0]
    seed = int(seed_vertex)
    if seed < 0 or seed >= n:
        raise IndexOutOfRange("vertex %d out of range [0, %d)" % (seed, n))
    if n_l < 0:
        raise IndexOutOfRange("depth must be >= 0")
    visited = {seed}
    frontier = [seed]
    for _ in range(int(n_l)):
        nxt = []
        for v in frontier:
            for u in mesh.neighbors(v):
                u = int(u)
                if u not in visited:
                    visited.add(u)
                    nxt.append(u)
        if not nxt:
            break
        frontier = nxt
    return np.array(sorted(visited), dtype=np.int64)
