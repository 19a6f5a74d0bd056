"""Analytic vertex gradients of the soft winding number.

The soft evaluator is smooth in the vertex positions, so its derivative has
a closed form (spelled out in :mod:`windvox._kernels`); this module wraps it
as a per-point Jacobian and as the gradient of a grid-supervised square
loss.  Central finite differences serve as the independent oracle in the
test suite — the analytic path must match them, not the other way round.

Exact-mode winding is piecewise constant in the vertices (moving a vertex
changes nothing until the surface sweeps past a query point), so its
gradient is zero almost everywhere.  That is why no exact-mode gradient is
exposed here: the demonstration lives in the tests only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._parallel import chunk_ranges, run_chunked
from .errors import OnSurfaceError
from .mesh_io import TriangleMesh
from .winding import QueryBatchConfig, ScalarField, surface_epsilon, winding_number_batch

__all__ = ["VertexGradients", "LossReport", "soft_winding_vertex_jacobian", "occupancy_loss_grad"]


@dataclass(frozen=True)
class VertexGradients:
    """Per-vertex 3-vectors, aligned with ``mesh.vertices`` order."""

    vectors: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "vectors",
            np.ascontiguousarray(np.asarray(self.vectors, dtype=np.float64).reshape(-1, 3)))

    def inf_norm(self) -> float:
        return float(np.abs(self.vectors).max()) if self.vectors.size else 0.0


@dataclass(frozen=True)
class LossReport:
    """Occupancy loss value plus its gradient and diagnostics."""

    loss: float
    grads: VertexGradients
    excluded_nodes: int  # nodes dropped from the loss by the surface policy


def soft_winding_vertex_jacobian(mesh: TriangleMesh, q) -> VertexGradients:
    """d W_soft(q) / d vertices, shape (V, 3).

    Raises :class:`OnSurfaceError` if q sits within tolerance of any face
    centroid (the dipole, and so the derivative, is singular there).
    """
    point = np.ascontiguousarray(np.asarray(q, dtype=np.float64).reshape(1, 3))
    _, flags = winding_number_batch(mesh, point, mode="soft")
    if flags[0]:
        raise OnSurfaceError("query point lies on a face centroid")
    grad = np.zeros((mesh.num_vertices, 3), dtype=np.float64)
    _kernels.soft_grad_accum(
        point, np.ones(1), np.ascontiguousarray(mesh.triangle_corners()),
        mesh.faces, surface_epsilon(mesh), grad)
    return VertexGradients(grad)


def occupancy_loss_grad(
    mesh: TriangleMesh,
    targets: ScalarField,
    weights: np.ndarray | None = None,
    batch: QueryBatchConfig | None = None,
) -> LossReport:
    """Weighted mean-square occupancy loss over a target grid, with gradient.

    loss = sum_n w_n (W_soft(node_n) - target_n)^2 / sum_n w_n, the sums
    running over nodes not flagged on-surface (flagged ones are excluded
    and counted in the report).  ``weights`` defaults to all ones, i.e. a
    plain mean.  The returned gradient is the exact derivative of that
    loss, evaluated with the same chunked, deterministic accumulation as
    :func:`windvox.winding.voxelize`: forward values first, then per-chunk
    gradient buffers merged in chunk order, so the result is independent of
    thread count.
    """
    if mesh.num_faces == 0:
        raise ValueError("cannot evaluate occupancy loss for an empty mesh")
    batch = batch or QueryBatchConfig()
    points = targets.spec.node_coordinates()
    n = len(points)
    target_values = np.asarray(targets.values, dtype=np.float64)
    if weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(weights, dtype=np.float64).reshape(n)
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")

    values, flags = winding_number_batch(mesh, points, mode="soft", batch=batch)
    included = ~flags
    wsum = float(w[included].sum())
    if wsum == 0.0:
        raise ValueError("no usable grid nodes: all excluded or zero-weighted")
    residual = np.where(included, values - target_values, 0.0)
    loss = float((w * residual * residual).sum() / wsum)

    # d loss / d v = sum_n (2 w_n r_n / wsum) * d W(q_n) / d v
    coefs = np.ascontiguousarray(2.0 * w * residual / wsum)
    tri = np.ascontiguousarray(mesh.triangle_corners())
    eps = surface_epsilon(mesh)
    chunk = max(1, int(batch.chunk_size))
    ranges = chunk_ranges(n, chunk)
    buffers = [np.zeros((mesh.num_vertices, 3)) for _ in ranges]

    def worker(s, e):
        # Ranges start at multiples of `chunk`, so s // chunk is the chunk id.
        _kernels.soft_grad_accum(points[s:e], coefs[s:e], tri, mesh.faces, eps,
                                 buffers[s // chunk])

    run_chunked(worker, n, chunk, batch.thread_count)
    total = np.zeros((mesh.num_vertices, 3))
    for buf in buffers:  # fixed chunk order, independent of scheduling
        total += buf
    return LossReport(loss=loss, grads=VertexGradients(total),
                      excluded_nodes=int(flags.sum()))
