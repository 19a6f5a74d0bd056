"""windvox: winding-number voxelization of triangle meshes.

Occupancy grids from arbitrary triangle soups — watertight or not — via
generalized winding numbers, plus the pieces around them: a smooth
evaluator with analytic vertex gradients, open-mesh closing by flipped
duplication, marching-cubes reconstruction, sampled distance metrics, and
occupancy-supervised mesh morphing.
"""

from .errors import DegenerateError, DivergedError, OnSurfaceError, ParseError
from .grad import LossReport, VertexGradients, occupancy_loss_grad, soft_winding_vertex_jacobian
from .mesh_io import (
    NormalizationTransform,
    TriangleMesh,
    VertexNormals,
    load_mesh,
    normalize_to_unit_cube,
    save_mesh,
    vertex_normals,
)
from .metrics import chamfer_distance, evaluate_reconstruction, hausdorff_distance, sample_surface
from .morph import MorphConfig, MorphReport, morph
from .openmesh import flipped_duplication
from .recon import laplacian_smooth, marching_cubes
from .winding import (
    GridSpec,
    QueryBatchConfig,
    ScalarField,
    binarize,
    load_field,
    save_field,
    solid_angle_triangle,
    voxelize,
    winding_number_batch,
    winding_number_exact,
    winding_number_soft,
)

__version__ = "0.1.0"

__all__ = [
    "DegenerateError", "DivergedError", "OnSurfaceError", "ParseError",
    "TriangleMesh", "NormalizationTransform", "VertexNormals",
    "load_mesh", "save_mesh", "normalize_to_unit_cube", "vertex_normals",
    "GridSpec", "ScalarField", "QueryBatchConfig",
    "solid_angle_triangle", "winding_number_exact", "winding_number_soft",
    "winding_number_batch", "voxelize", "binarize", "save_field", "load_field",
    "flipped_duplication",
    "VertexGradients", "LossReport", "soft_winding_vertex_jacobian", "occupancy_loss_grad",
    "marching_cubes", "laplacian_smooth",
    "sample_surface", "chamfer_distance", "hausdorff_distance", "evaluate_reconstruction",
    "MorphConfig", "MorphReport", "morph",
    "__version__",
]
