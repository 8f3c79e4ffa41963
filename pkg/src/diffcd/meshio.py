"""Wavefront OBJ subset: `v` lines carry the geometry, faces are optional.

Floats are written with %.17g so a save/load round trip is bit exact.
"""

import numpy as np

from .errors import ParseError
from .shapes import ConvexMesh, build_convex_mesh


def load_obj(path) -> ConvexMesh:
    verts = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] != "v":
                continue  # faces and other records are ignored
            if len(parts) < 4:
                raise ParseError("%s:%d: vertex line needs 3 coordinates" % (path, lineno))
            try:
                verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
            except ValueError:
                raise ParseError("%s:%d: bad float in vertex line" % (path, lineno)) from None
    if len(verts) < 4:
        raise ParseError("%s: fewer than 4 vertices" % path)
    return build_convex_mesh(np.asarray(verts))


def save_obj(path, vertices):
    vertices = np.asarray(vertices, dtype=np.float64)
    with open(path, "w", encoding="utf-8") as fh:
        for v in vertices:
            fh.write("v %.17g %.17g %.17g\n" % (v[0], v[1], v[2]))
