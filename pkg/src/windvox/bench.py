"""Desk-scale benchmark: voxelize → reconstruct → score, across a corpus.

For every mesh and resolution the pipeline is: normalize to the unit cube,
exact-mode voxelize on [-1, 1]^3, marching cubes at iso 0.5, ten rounds of
Laplacian smoothing at 0.15, then sampled Chamfer/Hausdorff statistics
against the normalized original (20000 samples, 3 repeats).  Per-stage
wall-clock times are recorded but never gated — timing depends on the host,
while the quality numbers and the scaling *shape* (time roughly linear in
face count, roughly cubic in resolution) are the reproducible part.

Reports are deterministic apart from the ``"time"`` subtrees: rerunning
with the same corpus and seeds yields byte-identical JSON once those are
stripped.

The standard test meshes this benchmark expects (Suzanne, the Stanford
Bunny, and friends) are publicly distributed in the common 3D test model
collections; :func:`fetch_corpus` downloads them by pinned URL.  Checksums
are recorded on first successful fetch into ``corpus.lock.json`` next to
the meshes and verified from then on.
"""

from __future__ import annotations

import hashlib
import json
import time
import urllib.request
from pathlib import Path

import numpy as np

from .mesh_io import load_mesh, normalize_to_unit_cube
from .metrics import evaluate_reconstruction
from .recon import laplacian_smooth, marching_cubes
from .winding import GridSpec, QueryBatchConfig, voxelize

__all__ = ["CORPUS_MESHES", "fetch_corpus", "run_benchmark", "format_report", "log_log_slope"]

_RAW = "https://raw.githubusercontent.com/alecjacobson/common-3d-test-models/master/data"

# Publicly redistributable standard test meshes, with the triangle counts
# their triangulated forms are known to have (used as a load sanity check
# where stated).
CORPUS_MESHES = [
    {"name": "suzanne", "url": f"{_RAW}/suzanne.obj", "triangles": 968},
    {"name": "stanford-bunny", "url": f"{_RAW}/stanford-bunny.obj", "triangles": 69451},
    {"name": "spot", "url": f"{_RAW}/spot.obj", "triangles": None},
    {"name": "cow", "url": f"{_RAW}/cow.obj", "triangles": None},
    {"name": "teapot", "url": f"{_RAW}/teapot.obj", "triangles": None},
    {"name": "armadillo", "url": f"{_RAW}/armadillo.obj", "triangles": None},
    {"name": "homer", "url": f"{_RAW}/homer.obj", "triangles": None},
    {"name": "fandisk", "url": f"{_RAW}/fandisk.obj", "triangles": None},
]


def fetch_corpus(corpus_dir, names: list[str] | None = None, timeout: float = 60.0) -> list[Path]:
    """Download the standard corpus meshes into ``corpus_dir``.

    Checksums are trust-on-first-use: the sha256 of each first successful
    download is written to ``corpus.lock.json`` and later fetches must
    match it.  Returns the paths actually present afterwards.  Requires
    network access; already-present files are left alone (but verified
    against the lock file when one exists).
    """
    corpus_dir = Path(corpus_dir)
    corpus_dir.mkdir(parents=True, exist_ok=True)
    lock_path = corpus_dir / "corpus.lock.json"
    lock = json.loads(lock_path.read_text()) if lock_path.exists() else {}
    wanted = [m for m in CORPUS_MESHES if names is None or m["name"] in names]
    paths = []
    for entry in wanted:
        dest = corpus_dir / f"{entry['name']}.obj"
        if not dest.exists():
            with urllib.request.urlopen(entry["url"], timeout=timeout) as resp:
                data = resp.read()
            dest.write_bytes(data)
        digest = hashlib.sha256(dest.read_bytes()).hexdigest()
        pinned = lock.get(entry["name"])
        if pinned is None:
            lock[entry["name"]] = digest
        elif pinned != digest:
            raise RuntimeError(
                f"{dest.name}: sha256 {digest} does not match pinned {pinned}")
        paths.append(dest)
    lock_path.write_text(json.dumps(lock, indent=2, sort_keys=True) + "\n")
    return paths


def run_benchmark(
    corpus_dir,
    resolutions: list[int],
    out_report=None,
    samples: int = 20000,
    repeats: int = 3,
    seed: int = 0,
    batch: QueryBatchConfig | None = None,
) -> dict:
    """Run the full pipeline over every OBJ/STL in ``corpus_dir``.

    Returns the report dict; writes it as JSON to ``out_report`` when
    given.  A mesh that fails at any stage contributes an ``"error"`` entry
    and the run continues.
    """
    corpus_dir = Path(corpus_dir)
    mesh_paths = sorted(
        [*corpus_dir.glob("*.obj"), *corpus_dir.glob("*.stl")], key=lambda p: p.name)
    report = {
        "settings": {"resolutions": [int(r) for r in resolutions],
                     "samples": int(samples), "repeats": int(repeats), "seed": int(seed)},
        "meshes": [],
    }
    for path in mesh_paths:
        entry = {"name": path.stem, "file": path.name}
        try:
            mesh = load_mesh(path)
            entry["faces"] = mesh.num_faces
            entry["vertices"] = mesh.num_vertices
            normalized, _ = normalize_to_unit_cube(mesh)
            entry["results"] = [
                _run_one(normalized, int(r), samples, repeats, seed, batch)
                for r in resolutions
            ]
        except Exception as exc:  # keep benching the rest of the corpus
            entry["error"] = f"{type(exc).__name__}: {exc}"
        report["meshes"].append(entry)
    if out_report is not None:
        Path(out_report).write_text(json.dumps(report, indent=2) + "\n")
    return report


def _run_one(normalized, resolution, samples, repeats, seed, batch):
    spec = GridSpec(bounds_min=(-1.0, -1.0, -1.0), bounds_max=(1.0, 1.0, 1.0),
                    resolution=resolution)
    times = {}
    t0 = time.perf_counter()
    field = voxelize(normalized, spec, mode="exact", batch=batch)
    times["voxelize"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    raw = marching_cubes(field, iso=0.5)
    times["marching_cubes"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    smoothed = laplacian_smooth(raw, lam=0.15, iterations=10)
    times["smooth"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    scores = evaluate_reconstruction(normalized, smoothed, n=samples,
                                     repeats=repeats, seed=seed)
    times["evaluate"] = time.perf_counter() - t0
    return {"resolution": resolution, "recon_faces": smoothed.num_faces,
            **scores, "time": times}


def format_report(report: dict) -> str:
    """Human-readable aligned table for a :func:`run_benchmark` report."""
    header = (f"{'mesh':<16} {'faces':>7} {'res':>4} {'chamfer':>10} "
              f"{'+/-':>9} {'hausdorff':>10} {'+/-':>9} {'vox s':>8}")
    lines = [header, "-" * len(header)]
    for entry in report["meshes"]:
        if "error" in entry:
            lines.append(f"{entry['name']:<16} ERROR {entry['error']}")
            continue
        for row in entry["results"]:
            lines.append(
                f"{entry['name']:<16} {entry['faces']:>7} {row['resolution']:>4} "
                f"{row['chamfer_mean']:>10.5f} {row['chamfer_std']:>9.5f} "
                f"{row['hausdorff_mean']:>10.5f} {row['hausdorff_std']:>9.5f} "
                f"{row['time']['voxelize']:>8.2f}")
    return "\n".join(lines)


def log_log_slope(xs, ys) -> float:
    """Least-squares slope of log(y) against log(x)."""
    return float(np.polyfit(np.log(np.asarray(xs, dtype=np.float64)),
                            np.log(np.asarray(ys, dtype=np.float64)), 1)[0])
