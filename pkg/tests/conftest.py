"""Shared fixtures and helpers for the windvox test suite.

Two jobs live here: a session-wide kernel warm-up so the JIT compile cost
never lands inside a timed test body, and a tiny registry the acceptance
tests use to get their one-line PASS/FAIL verdicts printed in the final
pytest summary (where output capturing cannot swallow them).
"""

import numpy as np
import pytest

import windvox as wv
from windvox import shapes

# ---------------------------------------------------------------------------
# kernel warm-up

@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile every jitted kernel once, before any test that times things."""
    mesh = shapes.cube(0.5)
    spec = wv.GridSpec(bounds_min=(-1.0,) * 3, bounds_max=(1.0,) * 3, resolution=2)
    pts = spec.node_coordinates()
    wv.winding_number_batch(mesh, pts, mode="exact")
    wv.winding_number_batch(mesh, pts, mode="exact", use_atan2=False)
    wv.winding_number_batch(mesh, pts, mode="soft")
    wv.voxelize(mesh, spec, mode="exact", precision="f32")
    wv.voxelize(mesh, spec, mode="soft", precision="f32")
    wv.soft_winding_vertex_jacobian(mesh, (3.0, 0.0, 0.0))


# ---------------------------------------------------------------------------
# probe-point generators (guaranteed strictly inside / outside the shapes)

def cube_probes(half, n, rng):
    """(inside, outside) points for shapes.cube(half) within [-2h, 2h]^3."""
    inside = rng.uniform(-0.9 * half, 0.9 * half, size=(n, 3))
    outside = np.empty((0, 3))
    while len(outside) < n:
        cand = rng.uniform(-2.0 * half, 2.0 * half, size=(2 * n, 3))
        keep = np.abs(cand).max(axis=1) > 1.1 * half
        outside = np.vstack([outside, cand[keep]])
    return inside, outside[:n]


def sphere_like_probes(r_in, r_out, n, rng):
    """(inside, outside) for a convex solid: inside ball r_in, shell beyond r_out."""
    dirs = rng.normal(size=(2 * n, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    inside = dirs[:n] * r_in * rng.uniform(0, 1, size=(n, 1)) ** (1 / 3)
    outside = dirs[n:] * rng.uniform(r_out, 2.0 * r_out, size=(n, 1))
    return inside, outside


def torus_probes(r_major, r_minor, n, rng):
    """(inside, outside) for the polygonal torus around the z=0 ring.

    Inside points stay within 0.6*r_minor of the analytic tube centerline,
    leaving a wide margin to the faceted surface; outside points mix the
    hole region around the axis with a far shell.
    """
    theta = rng.uniform(0, 2 * np.pi, size=n)
    phi = rng.uniform(0, 2 * np.pi, size=n)
    rho = rng.uniform(0, 0.6 * r_minor, size=n)
    ring = np.stack([r_major * np.cos(theta), r_major * np.sin(theta),
                     np.zeros(n)], axis=1)
    # local cross-section frame: radial (cos t, sin t, 0) and z
    radial = np.stack([np.cos(theta), np.sin(theta), np.zeros(n)], axis=1)
    inside = ring + rho[:, None] * (np.cos(phi)[:, None] * radial
                                    + np.sin(phi)[:, None] * np.array([0.0, 0.0, 1.0]))
    n_hole = n // 2
    hole = np.stack([
        rng.uniform(-0.3, 0.3, size=n_hole) * (r_major - r_minor),
        rng.uniform(-0.3, 0.3, size=n_hole) * (r_major - r_minor),
        rng.uniform(-1.0, 1.0, size=n_hole),
    ], axis=1)
    dirs = rng.normal(size=(n - n_hole, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    far = dirs * rng.uniform(1.2 * (r_major + r_minor),
                             2.0 * (r_major + r_minor), size=(n - n_hole, 1))
    return inside, np.vstack([hole, far])


# ---------------------------------------------------------------------------
# acceptance-criterion reporting

ACCEPTANCE_LINES = []


def record_criterion(number, name, ok, detail):
    """Store (and echo) one acceptance verdict line."""
    line = f"[criterion {number}] {'PASS' if ok else 'FAIL'} {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
