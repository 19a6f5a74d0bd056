"""Procedural meshes used by tests, benchmarks, and examples.

All closed shapes are generated with counterclockwise faces and outward
normals; ``hemisphere`` is deliberately open (it has a boundary rim).
"""

from __future__ import annotations

import numpy as np

from .mesh_io import TriangleMesh

__all__ = ["cube", "icosahedron", "icosphere", "hemisphere", "torus", "concatenate"]

# 12 triangles of the axis-aligned cube; vertex i has corner signs given by
# the bits of i in the order (x, y, z) below.
_CUBE_CORNERS = np.array(
    [
        [-1, -1, -1],
        [+1, -1, -1],
        [+1, +1, -1],
        [-1, +1, -1],
        [-1, -1, +1],
        [+1, -1, +1],
        [+1, +1, +1],
        [-1, +1, +1],
    ],
    dtype=np.float64,
)
_CUBE_FACES = np.array(
    [
        [0, 3, 2], [0, 2, 1],  # z = -1
        [4, 5, 6], [4, 6, 7],  # z = +1
        [0, 1, 5], [0, 5, 4],  # y = -1
        [2, 3, 7], [2, 7, 6],  # y = +1
        [0, 4, 7], [0, 7, 3],  # x = -1
        [1, 2, 6], [1, 6, 5],  # x = +1
    ],
    dtype=np.int64,
)


def cube(half_extent: float = 1.0, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Closed axis-aligned cube spanning ``center ± half_extent``."""
    verts = _CUBE_CORNERS * float(half_extent) + np.asarray(center, dtype=np.float64)
    return TriangleMesh(verts, _CUBE_FACES.copy())


def icosahedron(radius: float = 1.0) -> TriangleMesh:
    """Regular icosahedron with vertices on the sphere of ``radius``."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=np.float64,
    )
    verts *= radius / np.linalg.norm(verts[0])
    faces = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    return TriangleMesh(verts, faces)


def icosphere(subdivisions: int = 2, radius: float = 1.0) -> TriangleMesh:
    """Icosahedron with each face split 4-to-1 ``subdivisions`` times, vertices
    projected back onto the sphere.  Face count is 20 * 4**subdivisions."""
    mesh = icosahedron(radius)
    verts = [tuple(v) for v in mesh.vertices]
    faces = [tuple(f) for f in mesh.faces]
    for _ in range(subdivisions):
        midpoint: dict[tuple[int, int], int] = {}

        def mid(a: int, b: int) -> int:
            key = (a, b) if a < b else (b, a)
            i = midpoint.get(key)
            if i is None:
                p = np.array(verts[a]) + np.array(verts[b])
                p *= radius / np.linalg.norm(p)
                i = len(verts)
                verts.append(tuple(p))
                midpoint[key] = i
            return i

        next_faces = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            next_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = next_faces
    return TriangleMesh(np.array(verts), np.array(faces))


def hemisphere(subdivisions: int = 3, radius: float = 1.0) -> TriangleMesh:
    """Open upper half of an icosphere: the faces whose centroid has z > 0.

    The rim follows whatever edges the icosphere has near its equator, so
    this is a genuinely open surface with a jagged boundary — the kind of
    input the flipped-duplication pass exists for.
    """
    sphere = icosphere(subdivisions, radius)
    centroids = sphere.vertices[sphere.faces].mean(axis=1)
    kept = sphere.faces[centroids[:, 2] > 0.0]
    used = np.unique(kept)
    remap = np.full(sphere.num_vertices, -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return TriangleMesh(sphere.vertices[used], remap[kept])


def torus(
    major_radius: float = 0.7,
    minor_radius: float = 0.3,
    major_segments: int = 48,
    minor_segments: int = 24,
) -> TriangleMesh:
    """Closed ring torus around the z axis (tube centers at ``major_radius``)."""
    nu, nv = int(major_segments), int(minor_segments)
    u = 2.0 * np.pi * np.arange(nu) / nu
    v = 2.0 * np.pi * np.arange(nv) / nv
    uu, vv = np.meshgrid(u, v, indexing="ij")
    ring = major_radius + minor_radius * np.cos(vv)
    verts = np.stack(
        [ring * np.cos(uu), ring * np.sin(uu), minor_radius * np.sin(vv)], axis=-1
    ).reshape(-1, 3)

    iu, iv = np.meshgrid(np.arange(nu), np.arange(nv), indexing="ij")
    a = (iu * nv + iv).ravel()
    b = ((iu + 1) % nu * nv + iv).ravel()
    c = ((iu + 1) % nu * nv + (iv + 1) % nv).ravel()
    d = (iu * nv + (iv + 1) % nv).ravel()
    faces = np.concatenate([np.stack([a, b, c], 1), np.stack([a, c, d], 1)])
    return TriangleMesh(verts, faces)


def concatenate(*meshes: TriangleMesh) -> TriangleMesh:
    """Disjoint union of meshes (vertex indices offset, nothing welded)."""
    verts, faces, offset = [], [], 0
    for m in meshes:
        verts.append(m.vertices)
        faces.append(m.faces + offset)
        offset += m.num_vertices
    return TriangleMesh(np.concatenate(verts), np.concatenate(faces))
