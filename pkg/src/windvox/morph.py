"""Occupancy-supervised mesh morphing.

Deforms a template mesh — vertices move, connectivity stays — so that its
soft winding number over a target grid matches the target field.  The
optimizer is deliberately plain: gradient descent with momentum, plus
step-halving backtracking that only ever accepts a step which does not
increase the loss.  The interesting machinery (the differentiable
occupancy) lives in :mod:`windvox.grad`; this module just walks downhill.

Total loss = occupancy term (weighted mean-square residual over the
target's own grid nodes)  +  smooth_weight * sum_v |v - mean(neighbors)|^2.
The regularizer keeps thin triangles from crumpling long before it matters
to the data term; its gradient is the usual 2 L^T L V with L the uniform
Laplacian restricted to vertices that have neighbors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DivergedError
from .grad import occupancy_loss_grad
from .mesh_io import TriangleMesh
from .winding import GridSpec, QueryBatchConfig, ScalarField, winding_number_batch

__all__ = ["MorphConfig", "MorphReport", "morph"]

_MOMENTUM_HALVINGS = 8
_PLAIN_HALVINGS = 12


@dataclass(frozen=True)
class MorphConfig:
    """Optimizer settings.

    ``grid`` may be left None — the loss is evaluated on the target field's
    own grid (never resampled); when provided it must equal that grid and
    exists purely so call sites can state their intent explicitly.
    """

    step_size: float = 0.05
    momentum: float = 0.9
    iterations: int = 300
    smooth_weight: float = 1e-3
    grid: GridSpec | None = None
    log_every: int = 1
    batch: QueryBatchConfig = field(default_factory=QueryBatchConfig)

    def __post_init__(self):
        if self.step_size < 0.0:
            raise ValueError("step_size must be >= 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.smooth_weight < 0.0:
            raise ValueError("smooth_weight must be >= 0")
        if self.log_every < 1:
            raise ValueError("log_every must be >= 1")


@dataclass
class MorphReport:
    """Loss trace and bookkeeping for one morph run.

    ``entries`` holds {iter, loss, grad_inf_norm} dicts for iteration 0,
    every ``log_every``-th iteration, and the final one.  ``final_mesh_path``
    is filled by the CLI after writing the result; library callers get None.
    """

    entries: list[dict] = field(default_factory=list)
    final_mesh_path: str | None = None


def _uniform_laplacian(mesh: TriangleMesh) -> sp.csr_matrix:
    """L = I - D^-1 A on vertices with neighbors; zero rows elsewhere."""
    pairs = np.concatenate(
        [mesh.faces[:, [0, 1]], mesh.faces[:, [1, 2]], mesh.faces[:, [2, 0]]])
    pairs.sort(axis=1)
    edges = np.unique(pairs, axis=0)
    n = mesh.num_vertices
    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    adj = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    degree = np.asarray(adj.sum(axis=1)).ravel()
    has_nbrs = degree > 0
    inv_deg = np.where(has_nbrs, 1.0 / np.where(has_nbrs, degree, 1.0), 0.0)
    eye = sp.diags(has_nbrs.astype(np.float64))
    return (eye - sp.diags(inv_deg) @ adj).tocsr()


def morph(template: TriangleMesh, target: ScalarField,
          cfg: MorphConfig | None = None) -> tuple[TriangleMesh, MorphReport]:
    """Fit ``template``'s soft occupancy to ``target``; returns (mesh, report).

    Deterministic for fixed inputs: the loss/gradient evaluation inherits
    the chunked deterministic reduction, and the optimizer itself is
    sequential.  The logged loss is monotonically non-increasing — an
    iteration that cannot find a non-increasing step (momentum direction
    first, then pure gradient, each with step halving) keeps the current
    vertices and drops the accumulated velocity instead of moving uphill.

    Raises :class:`DivergedError` only if the loss turns non-finite, which
    the accept rule prevents after a finite start; a template initially
    overlapping face centroids with the grid is the realistic trigger.
    """
    cfg = cfg or MorphConfig()
    if template.num_faces == 0:
        raise ValueError("template mesh has no faces")
    if cfg.grid is not None and cfg.grid != target.spec:
        raise ValueError("cfg.grid, when given, must equal the target field's grid")
    lo, hi = template.bounds()
    if np.any(lo < target.spec.bounds_min) or np.any(hi > target.spec.bounds_max):
        raise ValueError("target grid bounds must contain the template bounding box")

    faces = template.faces
    lap = _uniform_laplacian(template)
    grid_points = target.spec.node_coordinates()
    target_values = np.asarray(target.values, dtype=np.float64)

    def occupancy_loss_only(verts: np.ndarray) -> float:
        # Mirrors the expression in occupancy_loss_grad exactly (same masking,
        # same summation order), so backtracking and gradient evaluations can
        # never disagree about the loss by even a rounding error.
        mesh = TriangleMesh(verts, faces)
        values, flags = winding_number_batch(mesh, grid_points, mode="soft", batch=cfg.batch)
        included = ~flags
        count = float(included.sum())
        if count == 0.0:
            return np.inf
        res = np.where(included, values - target_values, 0.0)
        return float((res * res).sum() / count)

    def smooth_energy(verts: np.ndarray) -> tuple[float, np.ndarray]:
        lv = lap @ verts
        return float((lv * lv).sum()), 2.0 * (lap.T @ lv)

    def full_eval(verts: np.ndarray) -> tuple[float, np.ndarray]:
        mesh = TriangleMesh(verts, faces)
        report = occupancy_loss_grad(mesh, target, batch=cfg.batch)
        energy, energy_grad = smooth_energy(verts)
        return (report.loss + cfg.smooth_weight * energy,
                report.grads.vectors + cfg.smooth_weight * energy_grad)

    def loss_only(verts: np.ndarray) -> float:
        energy, _ = smooth_energy(verts)
        return occupancy_loss_only(verts) + cfg.smooth_weight * energy

    verts = template.vertices.copy()
    report = MorphReport()
    loss, grad = full_eval(verts)
    if not np.isfinite(loss):
        raise DivergedError(f"initial loss is not finite ({loss})")

    def log(iteration: int) -> None:
        report.entries.append({
            "iter": iteration,
            "loss": float(loss),
            "grad_inf_norm": float(np.abs(grad).max()),
        })

    log(0)
    if cfg.step_size == 0.0 or cfg.iterations == 0:
        return TriangleMesh(verts, faces.copy()), report

    velocity = np.zeros_like(verts)
    for it in range(1, cfg.iterations + 1):
        accepted = False
        step = cfg.step_size
        for _ in range(_MOMENTUM_HALVINGS):
            trial_velocity = cfg.momentum * velocity - step * grad
            trial = verts + trial_velocity
            trial_loss = loss_only(trial)
            if np.isfinite(trial_loss) and trial_loss <= loss:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            # Momentum may point uphill regardless of step; retry without it.
            step = cfg.step_size
            for _ in range(_PLAIN_HALVINGS):
                trial_velocity = -step * grad
                trial = verts + trial_velocity
                trial_loss = loss_only(trial)
                if np.isfinite(trial_loss) and trial_loss <= loss:
                    accepted = True
                    break
                step *= 0.5
        if accepted:
            verts = trial
            velocity = trial_velocity
            # The accepted backtracking loss is authoritative — it is the value
            # the accept rule bounded — so the logged trace is non-increasing
            # by construction; full_eval only refreshes the gradient.
            loss = trial_loss
            _, grad = full_eval(verts)
        else:
            velocity = np.zeros_like(verts)  # stay put; drop stale momentum
        if not np.isfinite(loss):
            log(it)
            raise DivergedError(f"loss became non-finite at iteration {it}")
        if it % cfg.log_every == 0 or it == cfg.iterations:
            log(it)
    return TriangleMesh(verts, faces.copy()), report
