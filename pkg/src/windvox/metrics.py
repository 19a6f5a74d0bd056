"""Surface sampling and point-set distances for reconstruction quality.

Sampling is driven by a counter-based SplitMix64 generator: sample i of a
stream is a pure function of (seed, i), so results are reproducible
bit-for-bit across runs, platforms, and chunkings — there is no generator
state to share or advance.  The mixing constants are the standard SplitMix64
ones.

Chamfer convention used throughout this package:

    chamfer(A, B) = 0.5 * ( mean_a min_b |a-b|  +  mean_b min_a |a-b| )

i.e. plain Euclidean distances, not squared, averaged per side.  Hausdorff
is the max-of-max-mins on the same samples.  Published distance tables in
this problem space rarely say which convention they use; this one is pinned
here so every number this package emits is reproducible against it.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateError
from .mesh_io import TriangleMesh

__all__ = [
    "splitmix64_uniform",
    "sample_surface",
    "chamfer_distance",
    "hausdorff_distance",
    "evaluate_reconstruction",
]

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX_2 = np.uint64(0x94D049BB133111EB)
_U64_MASK = (1 << 64) - 1


def splitmix64_uniform(seed: int, count: int) -> np.ndarray:
    """``count`` uniforms in [0, 1): value i mixes the counter seed + (i+1)."""
    counter = np.arange(1, count + 1, dtype=np.uint64)
    z = np.uint64(seed & _U64_MASK) + counter * _GOLDEN  # wraps mod 2^64
    z = (z ^ (z >> np.uint64(30))) * _MIX_1
    z = (z ^ (z >> np.uint64(27))) * _MIX_2
    z = z ^ (z >> np.uint64(31))
    # Top 53 bits -> float64 in [0, 1).
    return (z >> np.uint64(11)).astype(np.float64) * 2.0**-53


def sample_surface(mesh: TriangleMesh, n: int, seed: int) -> np.ndarray:
    """n points drawn uniformly by area from the mesh surface, (n, 3).

    Faces are chosen with probability proportional to area; placement
    within a face uses uniform barycentric coordinates (u, v folded so
    u + v <= 1).  Fixed seed means fixed points, independent of n of any
    *other* call.  Raises :class:`DegenerateError` when the mesh has zero
    total area.
    """
    n = int(n)
    if n < 0:
        raise ValueError("sample count must be >= 0")
    if n == 0:
        return np.zeros((0, 3))
    tri = mesh.triangle_corners()
    if not len(tri):
        raise DegenerateError("mesh has no faces to sample")
    areas = 0.5 * np.linalg.norm(
        np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)
    total = float(areas.sum())
    if total <= 0.0:
        raise DegenerateError("mesh has zero total area")
    cdf = np.cumsum(areas)
    r = splitmix64_uniform(seed, 3 * n)
    face = np.searchsorted(cdf, r[0::3] * total, side="right")
    face = np.minimum(face, len(areas) - 1)
    u = r[1::3]
    v = r[2::3]
    fold = u + v > 1.0
    u = np.where(fold, 1.0 - u, u)
    v = np.where(fold, 1.0 - v, v)
    corners = tri[face]
    return (corners[:, 0]
            + u[:, None] * (corners[:, 1] - corners[:, 0])
            + v[:, None] * (corners[:, 2] - corners[:, 0]))


def _nearest_distances(queries: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Distance from each query to its nearest target point.

    k-d tree, single worker: the distance expression (sqrt of the summed
    squared coordinate differences) matches a brute-force scan exactly, so
    the spatial index changes speed and nothing else.  The test suite holds
    this to bit-identity against an O(n^2) oracle.
    """
    distances, _ = cKDTree(targets).query(queries, k=1, workers=1)
    return np.atleast_1d(distances)


def chamfer_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric mean nearest-neighbor distance (see module docstring)."""
    a = np.asarray(a, dtype=np.float64).reshape(-1, 3)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 3)
    if not len(a) or not len(b):
        raise ValueError("chamfer distance needs two non-empty point sets")
    return 0.5 * (float(_nearest_distances(a, b).mean())
                  + float(_nearest_distances(b, a).mean()))


def hausdorff_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric worst-case nearest-neighbor distance between point sets."""
    a = np.asarray(a, dtype=np.float64).reshape(-1, 3)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 3)
    if not len(a) or not len(b):
        raise ValueError("hausdorff distance needs two non-empty point sets")
    return max(float(_nearest_distances(a, b).max()),
               float(_nearest_distances(b, a).max()))


def evaluate_reconstruction(
    original: TriangleMesh,
    reconstructed: TriangleMesh,
    n: int = 20000,
    repeats: int = 3,
    seed: int = 0,
) -> dict:
    """Sampled Chamfer/Hausdorff statistics between two meshes.

    Repeat r draws ``n`` samples from *each* mesh with seed ``seed + r`` —
    the same stream for both meshes, so evaluating a mesh against itself
    reports exactly zero rather than the sampling-noise floor, while
    different repeats still probe genuinely different sample sets.
    Standard deviations are over the ``repeats`` values (population form).
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    chamfer = np.empty(repeats)
    hausdorff = np.empty(repeats)
    for r in range(repeats):
        pa = sample_surface(original, n, seed + r)
        pb = sample_surface(reconstructed, n, seed + r)
        chamfer[r] = chamfer_distance(pa, pb)
        hausdorff[r] = hausdorff_distance(pa, pb)
    return {
        "chamfer_mean": float(chamfer.mean()),
        "chamfer_std": float(chamfer.std()),
        "hausdorff_mean": float(hausdorff.mean()),
        "hausdorff_std": float(hausdorff.std()),
    }
