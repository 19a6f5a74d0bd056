"""End-to-end acceptance gate.

One test per shipping criterion; each computes its verdict, prints a
``[criterion N] PASS/FAIL`` line through :func:`conftest.record_criterion`,
and then asserts.  Heavier suites (scaling, the morph demo) live here
rather than in the per-module files so the fast unit run stays fast.
"""

import json
import time
from pathlib import Path

import numpy as np
import pytest

import windvox as wv
from windvox import shapes
from windvox.bench import fetch_corpus, log_log_slope, run_benchmark
from windvox.mesh_io import load_mesh, normalize_to_unit_cube, save_mesh
from windvox.metrics import sample_surface
from windvox.morph import MorphConfig, morph
from windvox.openmesh import flipped_duplication
from windvox.recon import laplacian_smooth, marching_cubes
from windvox.winding import GridSpec, QueryBatchConfig, voxelize, winding_number_batch

from conftest import cube_probes, record_criterion, sphere_like_probes, torus_probes
import test_grad as grad_helpers

CORPUS_DIR = Path(__file__).resolve().parent.parent / "assets" / "corpus"


def unit_grid(resolution, extent=1.0):
    return GridSpec((-extent,) * 3, (extent,) * 3, resolution)


def batch_values(mesh, points, **kw):
    values, _ = winding_number_batch(mesh, np.asarray(points, dtype=np.float64), **kw)
    return values


def surface_chamfer(mesh_a, mesh_b, n=20000, seed=0):
    return wv.chamfer_distance(sample_surface(mesh_a, n, seed=seed),
                               sample_surface(mesh_b, n, seed=seed + 1))


def test_criterion_1_exactness_suite():
    t0 = time.perf_counter()
    problems = []

    octant = wv.solid_angle_triangle([1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0],
                                     [0.0, 0, 0])
    if abs(octant - np.pi / 2) > 1e-9:
        problems.append(f"octant solid angle {octant!r}")

    rng = np.random.default_rng(20260822)
    trials = [
        ("cube", shapes.cube(0.5), cube_probes(0.5, 500, rng)),
        ("icosahedron", shapes.icosahedron(1.0),
         sphere_like_probes(0.75, 1.1, 500, rng)),
        ("torus", shapes.torus(), torus_probes(0.7, 0.3, 500, rng)),
    ]
    for name, mesh, (inside, outside) in trials:
        win_in = batch_values(mesh, inside)
        win_out = batch_values(mesh, outside)
        err = max(np.abs(win_in - 1.0).max(), np.abs(win_out).max())
        if err > 1e-9:
            problems.append(f"{name} winding error {err:.3e}")

    nested = shapes.concatenate(shapes.cube(0.5), shapes.cube(1.0))
    center = batch_values(nested, [[0.0, 0.0, 0.0]])[0]
    if abs(center - 2.0) > 1e-9:
        problems.append(f"nested-cube center {center!r}")

    mesh = shapes.icosahedron(1.0)
    flipped = wv.TriangleMesh(mesh.vertices, mesh.faces[:, [0, 2, 1]])
    pts = rng.uniform(-2, 2, size=(200, 3))
    if not np.array_equal(batch_values(flipped, pts), -batch_values(mesh, pts)):
        problems.append("orientation flip is not an exact negation")

    elapsed = time.perf_counter() - t0
    if elapsed >= 10.0:
        problems.append(f"runtime {elapsed:.1f}s >= 10s")
    ok = not problems
    record_criterion(1, "exactness suite", ok,
                     "; ".join(problems) or f"all probes exact, {elapsed:.1f}s")
    assert ok, problems


def test_criterion_2_two_argument_arctangent_regression():
    t0 = time.perf_counter()
    mesh = shapes.cube(0.5)
    spec = unit_grid(64)
    nodes = spec.node_coordinates()
    spacing = 2.0 / 63
    # nodes within one spacing of the surface shell |x|_inf = 0.5 are
    # legitimately fractional; everything else should be near 0 or 1
    clear = np.abs(np.abs(nodes).max(axis=1) - 0.5) > spacing

    fractional = {}
    for use_atan2 in (True, False):
        values = batch_values(mesh, nodes, use_atan2=use_atan2)[clear]
        fractional[use_atan2] = float(np.mean((values > 0.1) & (values < 0.9)))
    elapsed = time.perf_counter() - t0

    ok = fractional[True] < 1e-3 and fractional[False] > fractional[True] \
        and elapsed < 30.0
    record_criterion(
        2, "two-argument arctangent keeps off-surface nodes saturated", ok,
        f"fractional-node rate {fractional[True]:.2e} (atan2) vs "
        f"{fractional[False]:.2e} (single-argument), {elapsed:.1f}s")
    assert ok, fractional


def test_criterion_3_gradient_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(77)
    worst = 0.0
    for _ in range(100):
        mesh = grad_helpers.random_generic_mesh(rng)
        q = grad_helpers.off_centroid_point(mesh, rng)
        analytic = wv.soft_winding_vertex_jacobian(mesh, q).vectors
        fd = grad_helpers.fd_jacobian(mesh, q)
        denom = max(np.abs(fd).max(), 1e-6)
        worst = max(worst, np.abs(analytic - fd).max() / denom)

    # integer-valued occupancy: nudging any vertex leaves the value flat
    cube = shapes.cube(0.5)
    q = np.array([0.05, -0.03, 0.08])
    h = 1e-6
    exact_fd = 0.0
    for vi in range(cube.num_vertices):
        for axis in range(3):
            moved = []
            for sign in (+1.0, -1.0):
                verts = cube.vertices.copy()
                verts[vi, axis] += sign * h
                moved.append(batch_values(wv.TriangleMesh(verts, cube.faces),
                                          q[None])[0])
            exact_fd = max(exact_fd, abs(moved[0] - moved[1]) / (2 * h))
    elapsed = time.perf_counter() - t0

    ok = worst < 1e-4 and exact_fd < 1e-8 and elapsed < 60.0
    record_criterion(
        3, "analytic soft gradients vs finite differences", ok,
        f"worst relative error {worst:.2e} over 100 meshes; interior "
        f"integer-mode gradient {exact_fd:.2e}; {elapsed:.1f}s")
    assert ok, (worst, exact_fd, elapsed)


def test_criterion_4_open_mesh_closure():
    t0 = time.perf_counter()
    mesh = shapes.hemisphere(3, 1.0)
    closed = flipped_duplication(mesh, epsilon=0.01)

    centroids = mesh.vertices[mesh.faces].mean(axis=1)
    between = centroids[centroids[:, 2] > 0.5] * (1.0 - 0.005)
    win = batch_values(closed, between)
    origin = batch_values(closed, [[0.0, 0.0, 0.0]])[0]
    elapsed = time.perf_counter() - t0

    ok = bool(win.min() >= 0.9 and win.max() <= 1.1 and abs(origin) < 0.1
              and elapsed < 30.0)
    record_criterion(
        4, "flipped duplication closes an open surface", ok,
        f"between-layer winding in [{win.min():.3f}, {win.max():.3f}] "
        f"({len(win)} probes), origin {origin:.2e}, {elapsed:.1f}s")
    assert ok, (win.min(), win.max(), origin)


def reconstruct_scores(normalized, resolution):
    field = voxelize(normalized, unit_grid(resolution), mode="exact")
    recon = laplacian_smooth(marching_cubes(field, iso=0.5), lam=0.15, iterations=10)
    return wv.evaluate_reconstruction(normalized, recon, n=20000, repeats=3, seed=0)


def test_criterion_5_reference_mesh_quality():
    expectations = [
        # mesh file, resolution, metric key, expected value (+/- 25%)
        ("suzanne.obj", 256, "chamfer_mean", 0.01947),
        ("suzanne.obj", 256, "hausdorff_mean", 0.08047),
        ("suzanne.obj", 64, "chamfer_mean", 0.03614),
        ("stanford-bunny.obj", 128, "chamfer_mean", 0.02668),
    ]
    diagnostics = []
    try:
        fetch_corpus(CORPUS_DIR, names=["suzanne", "stanford-bunny"])
    except Exception as exc:
        diagnostics.append(f"fetch failed: {type(exc).__name__}: {exc}")

    missing = sorted({f for f, *_ in expectations if not (CORPUS_DIR / f).exists()})
    if missing:
        detail = (f"reference meshes unavailable ({', '.join(missing)}); "
                  + "; ".join(diagnostics)
                  + "; see assets/corpus/README.md for how to supply them")
        record_criterion(5, "reference-mesh reconstruction quality", False, detail)
        pytest.fail(detail)

    failures = []
    details = []
    scores = {}
    for filename, resolution, key, expected in expectations:
        if (filename, resolution) not in scores:
            normalized, _ = normalize_to_unit_cube(load_mesh(CORPUS_DIR / filename))
            scores[(filename, resolution)] = reconstruct_scores(normalized, resolution)
        got = scores[(filename, resolution)][key]
        details.append(f"{filename}@{resolution} {key}={got:.5f} (expect {expected})")
        if not 0.75 * expected <= got <= 1.25 * expected:
            failures.append(details[-1])
    ok = not failures
    record_criterion(5, "reference-mesh reconstruction quality", ok,
                     "; ".join(failures or details))
    assert ok, failures


def test_criterion_6_scaling_laws():
    grid64 = unit_grid(64)

    def timed_voxelize(mesh, spec):
        t0 = time.perf_counter()
        voxelize(mesh, spec, mode="exact")
        return time.perf_counter() - t0

    meshes = [shapes.torus(0.7, 0.3, 25, 20),    # 1000 faces
              shapes.torus(0.7, 0.3, 50, 40),    # 4000
              shapes.torus(0.7, 0.3, 100, 80)]   # 16000
    face_counts = [m.num_faces for m in meshes]
    face_times = [timed_voxelize(m, grid64) for m in meshes]
    face_slope = log_log_slope(face_counts, face_times)

    fixed = meshes[0]
    resolutions = [32, 64, 128]
    res_times = [timed_voxelize(fixed, unit_grid(r)) for r in resolutions]
    res_slope = log_log_slope(resolutions, res_times)

    ok = 0.8 <= face_slope <= 1.2 and 2.5 <= res_slope <= 3.5
    record_criterion(
        6, "linear-in-faces / cubic-in-resolution scaling", ok,
        f"face slope {face_slope:.2f} over {face_counts} "
        f"({', '.join(f'{t:.1f}s' for t in face_times)}); resolution slope "
        f"{res_slope:.2f} over {resolutions} "
        f"({', '.join(f'{t:.1f}s' for t in res_times)})")
    assert ok, (face_slope, res_slope)


def test_criterion_7_bit_identical_across_threads_and_runs(tmp_path):
    problems = []
    thread_counts = [1, 4, 16]

    def batch(threads, chunk):
        return QueryBatchConfig(chunk_size=chunk, thread_count=threads)

    mesh = shapes.icosphere(2, 0.6)
    spec = unit_grid(24)
    for mode in ("exact", "soft"):
        outs = [voxelize(mesh, spec, mode=mode, batch=batch(t, 500)).values.tobytes()
                for t in thread_counts for _ in range(2)]
        if len(set(outs)) != 1:
            problems.append(f"voxelize[{mode}] varies")

    template = shapes.icosphere(1, 0.5)
    target = voxelize(shapes.cube(0.55), GridSpec([-0.8] * 3, [0.8] * 3, 8))
    reports = [wv.occupancy_loss_grad(template, target, batch=batch(t, 40))
               for t in thread_counts for _ in range(2)]
    if len({r.loss for r in reports}) != 1 or \
            len({r.grads.vectors.tobytes() for r in reports}) != 1:
        problems.append("loss gradients vary")

    morph_target = voxelize(shapes.cube(0.5), GridSpec([-0.8] * 3, [0.8] * 3, 12))
    morph_outs = []
    for threads in thread_counts:
        for _ in range(2):
            result, report = morph(
                shapes.icosphere(1, 0.4), morph_target,
                MorphConfig(iterations=10, batch=batch(threads, 300)))
            morph_outs.append((result.vertices.tobytes(),
                               json.dumps(report.entries)))
    if len(set(morph_outs)) != 1:
        problems.append("morph results vary")

    corpus = tmp_path / "corpus"
    corpus.mkdir()
    save_mesh(shapes.cube(0.5), corpus / "cube.obj")
    save_mesh(shapes.icosphere(1, 0.5), corpus / "ball.stl")

    def stripped_report(threads):
        report = run_benchmark(corpus, [8, 10], samples=500, repeats=1,
                               batch=batch(threads, 500))
        for entry in report["meshes"]:
            for row in entry.get("results", []):
                row.pop("time")
        return json.dumps(report, sort_keys=True)

    bench_outs = [stripped_report(t) for t in thread_counts for _ in range(2)]
    if len(set(bench_outs)) != 1:
        problems.append("bench reports vary")

    ok = not problems
    record_criterion(7, "bit-identical across thread counts and reruns", ok,
                     "; ".join(problems) or
                     "voxelize/gradients/morph/bench identical across "
                     "threads {1,4,16} and reruns")
    assert ok, problems


def test_criterion_8_morph_demo():
    # The template needs faces comparable to the node spacing: per-face
    # dipole contributions spike at nodes much closer than a face width,
    # and a too-coarse template's cheapest descent direction is then to
    # flee the grid entirely rather than fit the target.
    t0 = time.perf_counter()
    template = shapes.icosphere(2, 0.5)
    cube = shapes.cube(0.6)
    target = voxelize(cube, GridSpec([-0.75] * 3, [0.75] * 3, 32), mode="exact")

    initial = surface_chamfer(template, cube)
    result, report = morph(template, target, MorphConfig(iterations=300))
    final = surface_chamfer(result, cube)
    elapsed = time.perf_counter() - t0

    losses = [e["loss"] for e in report.entries]
    monotone = all(b <= a for a, b in zip(losses, losses[1:]))
    ok = final <= 0.5 * initial and monotone and elapsed < 300.0
    record_criterion(
        8, "template morph halves the surface distance", ok,
        f"chamfer {initial:.4f} -> {final:.4f} "
        f"({final / initial:.2f}x), monotone={monotone}, {elapsed:.0f}s")
    assert ok, (initial, final, monotone, elapsed)
