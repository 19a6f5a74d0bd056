"""Surface reconstruction from occupancy grids: marching cubes + smoothing.

Marching cubes here is the classic 256-case table walk, vectorized over all
cells at once.  Crossing vertices are placed by linear interpolation along
cell edges and welded exactly: every lattice edge has one global id
(axis * num_nodes + node index), duplicate ids collapse to one vertex, so
neighboring cells share vertices and the output is watertight wherever the
field itself is clean.  Triangles are emitted in cell-index order, which
makes the output a pure function of the field — no threading, no hashing
order, no nondeterminism.

A field value exactly equal to the iso level counts as *outside*, matching
the strict inequality used by ``binarize``; interpolation then never
divides by zero, because a crossing edge always has one value <= iso and
one > iso.
"""

from __future__ import annotations

import numpy as np

from ._mc_tables import CORNER_OFFSETS, EDGE_CORNERS, MC_EDGES, MC_TRIANGLES
from .mesh_io import TriangleMesh
from .winding import ScalarField

__all__ = ["marching_cubes", "laplacian_smooth"]

# Each cell edge, described as (axis, base-corner offset): the edge runs
# from cell_corner + offset one step along axis.  Derived from the corner
# tables so the three conventions can never drift apart.
_EDGE_AXIS = np.empty(12, dtype=np.int64)
_EDGE_BASE = np.empty((12, 3), dtype=np.int64)
for _e, (_c0, _c1) in enumerate(EDGE_CORNERS):
    _o0, _o1 = CORNER_OFFSETS[_c0], CORNER_OFFSETS[_c1]
    _EDGE_AXIS[_e] = int(np.nonzero(_o0 != _o1)[0][0])
    _EDGE_BASE[_e] = np.minimum(_o0, _o1)


def marching_cubes(field: ScalarField, iso: float = 0.5) -> TriangleMesh:
    """Extract the iso-level surface of ``field`` as a triangle mesh.

    Output coordinates are in the field's world frame.  For fields where
    inside means value > iso (winding-number fields qualify), faces come
    out counterclockwise with outward normals.  A field with no crossings
    yields an empty mesh — that is a result, not an error.
    """
    rx, ry, rz = field.spec.resolution
    if min(rx, ry, rz) < 2:
        raise ValueError("marching cubes needs at least 2 nodes per axis")
    vals = np.ascontiguousarray(field.values3(), dtype=np.float64)
    outside = vals <= iso

    cases = np.zeros((rx - 1, ry - 1, rz - 1), dtype=np.int64)
    for bit, (dx, dy, dz) in enumerate(CORNER_OFFSETS):
        cases |= (
            outside[dx : rx - 1 + dx, dy : ry - 1 + dy, dz : rz - 1 + dz].astype(np.int64)
            << bit
        )
    active = np.argwhere((cases != 0) & (cases != 255))
    if not len(active):
        return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    rows = MC_TRIANGLES[cases[active[:, 0], active[:, 1], active[:, 2]]]

    cell_parts, edge_parts, slot_parts = [], [], []
    for slot in range(5):
        triple = rows[:, 3 * slot : 3 * slot + 3]
        emit = triple[:, 0] >= 0
        if not emit.any():
            break  # the table is -1 terminated; later slots are empty too
        cell_parts.append(active[emit])
        edge_parts.append(triple[emit])
        slot_parts.append(np.full(int(emit.sum()), slot, dtype=np.int64))
    cells = np.concatenate(cell_parts)
    tri_edges = np.concatenate(edge_parts)
    slots = np.concatenate(slot_parts)

    # Re-order emission to (cell index, slot within cell).
    cell_lin = (cells[:, 0] * (ry - 1) + cells[:, 1]) * (rz - 1) + cells[:, 2]
    order = np.lexsort((slots, cell_lin))
    cells = cells[order]
    tri_edges = tri_edges[order]

    # One global id per lattice edge: axis * num_nodes + base-node index.
    num_nodes = rx * ry * rz
    base = cells[:, None, :] + _EDGE_BASE[tri_edges]  # (T, 3, 3) node coords
    node_lin = (base[..., 0] * ry + base[..., 1]) * rz + base[..., 2]
    edge_ids = _EDGE_AXIS[tri_edges] * num_nodes + node_lin

    unique_ids, inverse = np.unique(edge_ids.ravel(), return_inverse=True)
    faces = inverse.reshape(-1, 3).astype(np.int64)

    axis = unique_ids // num_nodes
    node = unique_ids % num_nodes
    i = node // (ry * rz)
    j = (node // rz) % ry
    k = node % rz
    i2 = i + (axis == 0)
    j2 = j + (axis == 1)
    k2 = k + (axis == 2)
    va = vals[i, j, k]
    vb = vals[i2, j2, k2]
    t = (iso - va) / (vb - va)  # endpoints straddle iso, so vb != va

    xs, ys, zs = (field.spec.axis_nodes(a) for a in range(3))
    pa = np.stack([xs[i], ys[j], zs[k]], axis=1)
    pb = np.stack([xs[i2], ys[j2], zs[k2]], axis=1)
    verts = pa + t[:, None] * (pb - pa)
    return TriangleMesh(verts, faces)


def laplacian_smooth(mesh: TriangleMesh, lam: float = 0.15, iterations: int = 10) -> TriangleMesh:
    """Uniform (umbrella) Laplacian smoothing with Jacobi updates.

    Per iteration every vertex moves by ``lam * (mean of its 1-ring
    neighbors - itself)``, all displacements computed from the
    pre-iteration positions.  Connectivity and vertex count are untouched;
    vertices without neighbors stay put.
    """
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    if mesh.num_faces == 0 or iterations == 0 or lam == 0.0:
        return TriangleMesh(mesh.vertices.copy(), mesh.faces.copy())
    pairs = np.concatenate(
        [mesh.faces[:, [0, 1]], mesh.faces[:, [1, 2]], mesh.faces[:, [2, 0]]])
    pairs.sort(axis=1)
    edges = np.unique(pairs, axis=0)
    degree = np.zeros(mesh.num_vertices)
    np.add.at(degree, edges[:, 0], 1.0)
    np.add.at(degree, edges[:, 1], 1.0)
    movable = degree > 0
    denom = np.where(movable, degree, 1.0)[:, None]

    verts = mesh.vertices.copy()
    for _ in range(int(iterations)):
        acc = np.zeros_like(verts)
        np.add.at(acc, edges[:, 0], verts[edges[:, 1]])
        np.add.at(acc, edges[:, 1], verts[edges[:, 0]])
        mean = acc / denom
        verts = np.where(movable[:, None], verts + lam * (mean - verts), verts)
    return TriangleMesh(verts, mesh.faces.copy())
