"""Triangle mesh containers, OBJ/STL round-tripping, normalization, normals.

Formats
-------
OBJ: ASCII ``v``/``f`` records.  Face indices are 1-based; negative indices
count back from the most recently parsed vertex, per the format.  Polygons
with more than three vertices are fan-triangulated from their first vertex.
Everything else (``vt``, ``vn``, ``usemtl``, groups, ...) is ignored.

STL: binary only (80-byte header, uint32 triangle count, little-endian
float32 triangles).  Stored per-triangle normals are ignored on load and
recomputed on save.  Exactly coincident vertices are welded on load, in
first-occurrence order, so faces index a shared vertex list.  ASCII STL is
rejected with :class:`~windvox.errors.ParseError`.

I/O failures propagate as the builtin ``OSError``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import DegenerateError, ParseError

__all__ = [
    "TriangleMesh",
    "NormalizationTransform",
    "VertexNormals",
    "load_mesh",
    "save_mesh",
    "normalize_to_unit_cube",
    "vertex_normals",
]


@dataclass(frozen=True)
class TriangleMesh:
    """An indexed triangle soup.

    Parameters
    ----------
    vertices : (V, 3) float array
        Vertex positions in model units.
    faces : (F, 3) int array
        Vertex index triples, 0-based.  Counterclockwise order implies an
        outward normal.  Degenerate, duplicated, and non-manifold faces are
        all admitted; no watertightness is assumed anywhere in this type.

    Raises
    ------
    IndexError
        If any face references a vertex outside ``[0, V)``.
    """

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3))
        f = np.ascontiguousarray(np.asarray(self.faces, dtype=np.int64).reshape(-1, 3))
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            bad = f[(f < 0) | (f >= len(v))][0]
            raise IndexError(f"face references vertex {bad}, but mesh has {len(v)} vertices")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_faces(self) -> int:
        return len(self.faces)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """(min, max) corners of the axis-aligned bounding box."""
        if not len(self.vertices):
            raise DegenerateError("mesh has no vertices")
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def bbox_diagonal(self) -> float:
        lo, hi = self.bounds()
        return float(np.linalg.norm(hi - lo))

    def triangle_corners(self) -> np.ndarray:
        """Per-face corner positions, shape (F, 3, 3)."""
        return self.vertices[self.faces]


@dataclass(frozen=True)
class NormalizationTransform:
    """Uniform scale-and-center map ``x -> (x - center) / scale``."""

    center: np.ndarray
    scale: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64).reshape(3))
        object.__setattr__(self, "scale", float(self.scale))

    def apply(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=np.float64) - self.center) / self.scale

    def invert(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) * self.scale + self.center


class VertexNormals(NamedTuple):
    """Result of :func:`vertex_normals`.

    ``normals`` is (V, 3); ``zero_normal`` flags vertices with no
    non-degenerate incident face, whose normal is (0, 0, 0).
    """

    normals: np.ndarray
    zero_normal: np.ndarray


def load_mesh(path, format: str | None = None) -> TriangleMesh:
    """Load a triangle mesh from an OBJ or binary STL file.

    ``format`` is ``"obj"`` or ``"stl"``; inferred from the file suffix when
    omitted.  Faces are returned exactly as stored (after triangulation of
    OBJ polygons); vertex order is preserved.
    """
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    if fmt == "obj":
        return _load_obj(path)
    if fmt == "stl":
        return _load_stl(path)
    raise ParseError(f"unsupported mesh format {fmt!r} (expected obj or stl)")


def save_mesh(mesh: TriangleMesh, path, format: str | None = None) -> None:
    """Write ``mesh`` as OBJ or binary STL.

    OBJ coordinates are printed with shortest round-trip ``repr``, so
    ``load_mesh(save_mesh(m))`` reproduces vertices exactly and faces
    verbatim.  STL is limited to float32 precision by the format.
    """
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    if fmt == "obj":
        _save_obj(mesh, path)
    elif fmt == "stl":
        _save_stl(mesh, path)
    else:
        raise ParseError(f"unsupported mesh format {fmt!r} (expected obj or stl)")


def normalize_to_unit_cube(mesh: TriangleMesh) -> tuple[TriangleMesh, NormalizationTransform]:
    """Center the mesh at the origin and scale its longest axis to [-1, 1].

    The scale is uniform, so aspect ratio (and therefore every distance
    ratio) is preserved.  Applying the returned transform to the original
    vertices reproduces the normalized ones; ``invert`` undoes it.
    """
    if not len(mesh.vertices):
        raise DegenerateError("cannot normalize a mesh with no vertices")
    lo, hi = mesh.bounds()
    extent = hi - lo
    scale = float(extent.max()) / 2.0
    if scale == 0.0:
        raise DegenerateError("all vertices coincide; normalization scale undefined")
    center = (lo + hi) / 2.0
    t = NormalizationTransform(center=center, scale=scale)
    return TriangleMesh(t.apply(mesh.vertices), mesh.faces), t


def vertex_normals(mesh: TriangleMesh) -> VertexNormals:
    """Area-weighted vertex normals.

    Each face contributes its unnormalized cross product (twice the face
    area times the unit normal) to its three corners; the accumulated sums
    are normalized at the end.  Vertices with a zero accumulated sum —
    isolated ones, or vertices touched only by degenerate faces — keep the
    normal (0, 0, 0) and are flagged in ``zero_normal`` rather than treated
    as an error.
    """
    n = np.zeros((mesh.num_vertices, 3), dtype=np.float64)
    if mesh.num_faces:
        tri = mesh.triangle_corners()
        fn = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        for k in range(3):
            np.add.at(n, mesh.faces[:, k], fn)
    norms = np.linalg.norm(n, axis=1)
    zero = norms == 0.0
    n[~zero] /= norms[~zero, None]
    return VertexNormals(normals=n, zero_normal=zero)


# ---------------------------------------------------------------------------
# OBJ


def _load_obj(path: Path) -> TriangleMesh:
    vertices: list[tuple[float, float, float]] = []
    faces: list[tuple[int, int, int]] = []
    with open(path, "r") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise ParseError(f"{path.name}:{lineno}: vertex needs 3 coordinates")
                try:
                    vertices.append((float(parts[1]), float(parts[2]), float(parts[3])))
                except ValueError as exc:
                    raise ParseError(f"{path.name}:{lineno}: bad vertex coordinate") from exc
            elif tag == "f":
                if len(parts) < 4:
                    raise ParseError(f"{path.name}:{lineno}: face needs at least 3 vertices")
                idx = [_obj_index(p, len(vertices), path.name, lineno) for p in parts[1:]]
                for k in range(1, len(idx) - 1):  # fan from the first polygon vertex
                    faces.append((idx[0], idx[k], idx[k + 1]))
            # vt/vn/vp/usemtl/mtllib/o/g/s/l: ignored
    verts = np.array(vertices, dtype=np.float64).reshape(-1, 3)
    return TriangleMesh(verts, np.array(faces, dtype=np.int64).reshape(-1, 3))


def _obj_index(token: str, num_vertices: int, name: str, lineno: int) -> int:
    head = token.split("/")[0]
    try:
        i = int(head)
    except ValueError as exc:
        raise ParseError(f"{name}:{lineno}: bad face index {token!r}") from exc
    if i == 0:
        raise ParseError(f"{name}:{lineno}: OBJ indices are 1-based; 0 is invalid")
    # Negative indices are relative to the vertices parsed so far.
    resolved = num_vertices + i if i < 0 else i - 1
    if not 0 <= resolved < num_vertices:
        raise IndexError(f"{name}:{lineno}: face references vertex {i}, only {num_vertices} defined")
    return resolved


def _save_obj(mesh: TriangleMesh, path: Path) -> None:
    with open(path, "w") as fh:
        for x, y, z in mesh.vertices:
            fh.write(f"v {float(x)!r} {float(y)!r} {float(z)!r}\n")
        for a, b, c in mesh.faces:
            fh.write(f"f {a + 1} {b + 1} {c + 1}\n")


# ---------------------------------------------------------------------------
# binary STL

_STL_TRI = struct.Struct("<12fH")


def _load_stl(path: Path) -> TriangleMesh:
    data = Path(path).read_bytes()
    if len(data) < 84:
        raise ParseError(f"{path.name}: too short for binary STL")
    (count,) = struct.unpack_from("<I", data, 80)
    if len(data) != 84 + 50 * count:
        if data.lstrip()[:5] == b"solid":
            raise ParseError(f"{path.name}: ASCII STL is not supported; convert to binary")
        raise ParseError(f"{path.name}: size does not match triangle count {count}")
    vert_index: dict[bytes, int] = {}
    vertices: list[tuple[float, float, float]] = []
    faces = np.empty((count, 3), dtype=np.int64)
    off = 84
    for t in range(count):
        rec = _STL_TRI.unpack_from(data, off)
        off += 50
        for k in range(3):
            key = struct.pack("<3f", *rec[3 + 3 * k : 6 + 3 * k])
            i = vert_index.get(key)
            if i is None:
                i = len(vertices)
                vert_index[key] = i
                vertices.append(rec[3 + 3 * k : 6 + 3 * k])
            faces[t, k] = i
    verts = np.array(vertices, dtype=np.float64).reshape(-1, 3)
    return TriangleMesh(verts, faces)


def _save_stl(mesh: TriangleMesh, path: Path) -> None:
    tri = mesh.triangle_corners().astype(np.float32)
    fn = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]).astype(np.float64)
    norms = np.linalg.norm(fn, axis=1)
    ok = norms > 0.0
    fn[ok] /= norms[ok, None]
    fn = fn.astype(np.float32)
    with open(path, "wb") as fh:
        fh.write(b"windvox binary STL".ljust(80, b"\0"))
        fh.write(struct.pack("<I", mesh.num_faces))
        for t in range(mesh.num_faces):
            fh.write(_STL_TRI.pack(*fn[t], *tri[t].ravel(), 0))
