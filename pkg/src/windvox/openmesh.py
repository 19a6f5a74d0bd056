"""Closing fully open surfaces by flipped duplication.

An open surface has no inside, so its winding number is fractional
everywhere.  Duplicating the sheet a small distance along the negative
vertex normals and reversing the copies' orientation turns it into a thin,
almost-closed shell: between the two layers the winding is ~1, away from
them it cancels to ~0, and the unavoidable slit along the boundary rim
perturbs the integral only locally.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateError
from .mesh_io import TriangleMesh, vertex_normals

__all__ = ["flipped_duplication"]


def flipped_duplication(mesh: TriangleMesh, epsilon: float = 0.01) -> TriangleMesh:
    """Append an offset, orientation-reversed copy of ``mesh``.

    The output keeps the original vertices and faces first and unmodified;
    vertex i's duplicate sits at index V + i, displaced by ``-epsilon``
    times its area-weighted vertex normal, and each duplicated face
    (v0', v1', v2') is emitted as (v0', v2', v1') so its normal points the
    other way.  ``epsilon`` is a distance in mesh units — callers working
    on normalized geometry get the intended "one percent of the half-extent"
    from the 0.01 default.

    Vertices whose normal came out zero (isolated, or touching only
    degenerate faces) are duplicated in place; the local slit is degenerate
    but the winding integral tolerates it.  Raises
    :class:`DegenerateError` when *every* normal is zero, since then no
    offset direction exists at all.
    """
    if float(epsilon) <= 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    normals, zero = vertex_normals(mesh)
    if mesh.num_vertices == 0 or bool(zero.all()):
        raise DegenerateError("every vertex normal is zero; nothing to offset along")
    shifted = mesh.vertices - float(epsilon) * normals
    flipped = (mesh.faces + mesh.num_vertices)[:, [0, 2, 1]]
    return TriangleMesh(
        np.concatenate([mesh.vertices, shifted]),
        np.concatenate([mesh.faces, flipped]),
    )
