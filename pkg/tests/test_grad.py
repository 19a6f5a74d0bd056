"""Analytic soft-winding gradients against central finite differences.

The finite-difference path is the authority here: every analytic value must
reproduce it.  Random meshes are built with distinct per-face vertex sets so
no pair of faces can cancel to an identically-zero field (which would leave
nothing but noise for the relative comparison).
"""

import numpy as np
import pytest

import windvox as wv
from windvox import shapes


def random_generic_mesh(rng, max_vertices=50):
    nv = int(rng.integers(6, max_vertices + 1))
    verts = rng.normal(size=(nv, 3))
    nf = int(rng.integers(4, 12))
    seen, faces = set(), []
    while len(faces) < nf:
        f = rng.choice(nv, size=3, replace=False)
        key = frozenset(f.tolist())
        if key not in seen:
            seen.add(key)
            faces.append(f.tolist())
    return wv.TriangleMesh(verts, faces)


def fd_jacobian(mesh, q, h=1e-6):
    out = np.zeros((mesh.num_vertices, 3))
    for vi in range(mesh.num_vertices):
        for c in range(3):
            vp = mesh.vertices.copy()
            vp[vi, c] += h
            vm = mesh.vertices.copy()
            vm[vi, c] -= h
            wp = wv.winding_number_soft(wv.TriangleMesh(vp, mesh.faces), q)
            wm = wv.winding_number_soft(wv.TriangleMesh(vm, mesh.faces), q)
            out[vi, c] = (wp - wm) / (2 * h)
    return out


def off_centroid_point(mesh, rng, min_dist=0.5):
    centroids = mesh.vertices[mesh.faces].mean(axis=1)
    while True:
        q = rng.normal(size=3) * 2
        if np.linalg.norm(centroids - q, axis=1).min() >= min_dist:
            return q


# ---------------------------------------------------------------------------
# per-point jacobian

def test_single_triangle_jacobian_matches_fd():
    verts = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]])
    mesh = wv.TriangleMesh(verts, [[0, 1, 2]])
    q = np.array([0.4, -0.3, 1.2])
    an = wv.soft_winding_vertex_jacobian(mesh, q).vectors
    fd = fd_jacobian(mesh, q)
    assert np.abs(an - fd).max() / np.abs(fd).max() < 1e-5


def test_jacobian_matches_fd_on_random_meshes():
    rng = np.random.default_rng(17)
    for _ in range(25):
        mesh = random_generic_mesh(rng)
        q = off_centroid_point(mesh, rng)
        an = wv.soft_winding_vertex_jacobian(mesh, q).vectors
        fd = fd_jacobian(mesh, q)
        assert np.isfinite(an).all()
        assert np.abs(an - fd).max() / np.abs(fd).max() < 1e-4


def test_jacobian_translation_equivariance():
    rng = np.random.default_rng(29)
    mesh = random_generic_mesh(rng)
    q = off_centroid_point(mesh, rng)
    a = wv.soft_winding_vertex_jacobian(mesh, q).vectors
    t = np.array([5.0, -3.0, 2.0])
    moved = wv.TriangleMesh(mesh.vertices + t, mesh.faces)
    b = wv.soft_winding_vertex_jacobian(moved, q + t).vectors
    assert np.abs(a - b).max() < 1e-12


def test_jacobian_orientation_antisymmetry():
    rng = np.random.default_rng(37)
    mesh = random_generic_mesh(rng)
    q = off_centroid_point(mesh, rng)
    a = wv.soft_winding_vertex_jacobian(mesh, q).vectors
    flipped = wv.TriangleMesh(mesh.vertices, mesh.faces[:, [0, 2, 1]])
    b = wv.soft_winding_vertex_jacobian(flipped, q).vectors
    assert np.array_equal(a, -b)


def test_jacobian_sum_rule_equals_negative_query_gradient():
    # moving the whole mesh by t is the same as moving q by -t
    mesh = shapes.icosphere(1, radius=0.8)
    q = np.array([0.3, 1.4, -0.2])
    total = wv.soft_winding_vertex_jacobian(mesh, q).vectors.sum(axis=0)
    h = 1e-6
    grad_q = np.array([
        (wv.winding_number_soft(mesh, q + h * e) -
         wv.winding_number_soft(mesh, q - h * e)) / (2 * h)
        for e in np.eye(3)
    ])
    assert np.abs(total + grad_q).max() < 1e-9


def test_jacobian_raises_on_centroid():
    mesh = shapes.cube(0.5)
    centroid = mesh.vertices[mesh.faces[4]].mean(axis=0)
    with pytest.raises(wv.OnSurfaceError):
        wv.soft_winding_vertex_jacobian(mesh, centroid)


# ---------------------------------------------------------------------------
# occupancy loss

def _grid(res, lo=-1.0, hi=1.0):
    return wv.GridSpec(bounds_min=(lo,) * 3, bounds_max=(hi,) * 3, resolution=res)


def test_loss_at_global_minimum_is_zero():
    mesh = shapes.icosphere(0, radius=0.5)
    spec = _grid(6)
    values, flags = wv.winding_number_batch(mesh, spec.node_coordinates(), mode="soft")
    assert not flags.any()
    report = wv.occupancy_loss_grad(mesh, wv.ScalarField(spec=spec, values=values))
    assert report.loss < 1e-20
    assert report.grads.inf_norm() < 1e-10
    assert report.excluded_nodes == 0


def test_loss_gradient_matches_fd():
    rng = np.random.default_rng(43)
    verts = rng.normal(size=(20, 3)) * 0.4
    faces = []
    seen = set()
    while len(faces) < 12:
        f = rng.choice(20, size=3, replace=False)
        key = frozenset(f.tolist())
        if key not in seen:
            seen.add(key)
            faces.append(f.tolist())
    mesh = wv.TriangleMesh(verts, faces)
    spec = _grid(8)
    target = wv.ScalarField(spec=spec,
                            values=rng.uniform(0, 1, size=spec.num_nodes))
    report = wv.occupancy_loss_grad(mesh, target)

    def loss_of(v):
        return wv.occupancy_loss_grad(wv.TriangleMesh(v, faces), target).loss

    fd = np.zeros_like(report.grads.vectors)
    h = 1e-6
    for vi in range(20):
        for c in range(3):
            vp = verts.copy()
            vp[vi, c] += h
            vm = verts.copy()
            vm[vi, c] -= h
            fd[vi, c] = (loss_of(vp) - loss_of(vm)) / (2 * h)
    assert np.abs(report.grads.vectors - fd).max() / np.abs(fd).max() < 1e-4


def test_loss_weights_rescale_and_validate():
    mesh = shapes.icosphere(0, radius=0.5)
    spec = _grid(5)
    target = wv.ScalarField(spec=spec, values=np.zeros(spec.num_nodes))
    plain = wv.occupancy_loss_grad(mesh, target)
    doubled = wv.occupancy_loss_grad(mesh, target,
                                     weights=np.full(spec.num_nodes, 2.0))
    # uniform weights cancel in the normalized mean
    assert np.isclose(doubled.loss, plain.loss, rtol=1e-12)
    assert np.allclose(doubled.grads.vectors, plain.grads.vectors, atol=1e-15)
    with pytest.raises(ValueError):
        wv.occupancy_loss_grad(mesh, target, weights=-np.ones(spec.num_nodes))
    with pytest.raises(ValueError):
        wv.occupancy_loss_grad(mesh, target, weights=np.zeros(spec.num_nodes))


def test_excluded_nodes_carry_no_gradient():
    # a face centroid placed exactly on a grid node: that node is excluded,
    # and zeroing its target must not change loss or gradient
    verts = np.array([[0.0, -0.3, -0.3], [0.0, 0.6, -0.3], [0.0, -0.3, 0.6],
                      [2.0, 0.0, 0.0], [2.0, 1.0, 0.0], [2.0, 0.0, 1.0]])
    faces = [[0, 1, 2], [3, 4, 5]]
    mesh = wv.TriangleMesh(verts, faces)
    assert np.allclose(verts[faces[0]].mean(axis=0), 0.0)  # centroid at origin
    spec = _grid(3)  # has a node exactly at the origin
    rng = np.random.default_rng(47)
    base = rng.uniform(0, 1, size=spec.num_nodes)
    origin_node = np.flatnonzero(
        (np.abs(spec.node_coordinates()) < 1e-12).all(axis=1))[0]
    tampered = base.copy()
    tampered[origin_node] = 123.0
    r1 = wv.occupancy_loss_grad(mesh, wv.ScalarField(spec=spec, values=base))
    r2 = wv.occupancy_loss_grad(mesh, wv.ScalarField(spec=spec, values=tampered))
    assert r1.excluded_nodes == 1
    assert r2.loss == r1.loss
    assert np.array_equal(r2.grads.vectors, r1.grads.vectors)


def test_loss_rejects_empty_mesh():
    empty = wv.TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    spec = _grid(3)
    target = wv.ScalarField(spec=spec, values=np.zeros(spec.num_nodes))
    with pytest.raises(ValueError):
        wv.occupancy_loss_grad(empty, target)


def test_loss_gradient_deterministic_across_threads():
    mesh = shapes.icosphere(1, radius=0.5)
    spec = _grid(7)
    target = wv.ScalarField(spec=spec, values=np.zeros(spec.num_nodes))
    ref = wv.occupancy_loss_grad(mesh, target,
                                 batch=wv.QueryBatchConfig(chunk_size=40,
                                                           thread_count=1))
    for threads in (4, 16):
        got = wv.occupancy_loss_grad(mesh, target,
                                     batch=wv.QueryBatchConfig(chunk_size=40,
                                                               thread_count=threads))
        assert got.loss == ref.loss
        assert got.grads.vectors.tobytes() == ref.grads.vectors.tobytes()


# ---------------------------------------------------------------------------
# the contrast case: exact-mode winding has no usable gradient

def test_exact_winding_gradient_vanishes_inside():
    mesh = shapes.cube(0.5)
    q = np.array([0.1, -0.05, 0.2])
    h = 1e-6
    worst = 0.0
    for vi in range(mesh.num_vertices):
        for c in range(3):
            vp = mesh.vertices.copy()
            vp[vi, c] += h
            vm = mesh.vertices.copy()
            vm[vi, c] -= h
            wp = wv.winding_number_exact(wv.TriangleMesh(vp, mesh.faces), q)
            wm = wv.winding_number_exact(wv.TriangleMesh(vm, mesh.faces), q)
            worst = max(worst, abs(wp - wm) / (2 * h))
    # the interior value is pinned at 1: no signal reaches the vertices
    assert worst < 1e-8
