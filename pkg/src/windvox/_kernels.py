"""Compiled batch kernels for winding-number evaluation and its gradients.

Everything here is deliberately scalar-loop code under ``@njit``: per query
point, faces are accumulated sequentially in ascending index order with
``fastmath=False``, so the floating-point result is a pure function of the
inputs — independent of thread count, chunk size, and repeated runs.  The
callers in :mod:`windvox.winding` and :mod:`windvox.grad` parallelize over
disjoint point ranges and write into preallocated output slices, which keeps
that guarantee intact.

The solid-angle accumulation uses the Van Oosterom–Strackee arrangement

    Omega = 2 * atan2(det(a, b, c), |a||b||c| + (a.b)|c| + (b.c)|a| + (c.a)|b|)

with a, b, c the *unnormalized* vertex offsets.  Both atan2 arguments are the
normalized-direction ones scaled by |a||b||c| > 0, so the angle is identical,
but there is no division: queries that land exactly on a vertex produce
atan2(0, 0) = 0 instead of NaN, and the inner loop is measurably faster.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_FOUR_PI = 4.0 * np.pi
_EIGHT_PI = 8.0 * np.pi

# Barycentric slack for the point-in-triangle part of the on-surface test;
# dimensionless, so independent of mesh scale.
_BARY_TOL = 1e-12


@njit(cache=True, nogil=True, fastmath=False)
def exact_batch(points, tri, nhat, pld, eps, use_atan2, out, flags):
    """Exact winding numbers for ``points`` against triangles ``tri``.

    tri: (F, 3, 3) corner positions, degenerate faces already removed.
    nhat: (F, 3) unit face normals;  pld: (F,) plane offsets nhat . v0.
    eps: absolute on-surface tolerance.  use_atan2=False switches to the
    plain-arctan branch (regression demonstration path, not production).
    Writes winding numbers into ``out`` and on-surface hits into ``flags``.
    """
    n_pts = points.shape[0]
    n_faces = tri.shape[0]
    for p in range(n_pts):
        qx = points[p, 0]
        qy = points[p, 1]
        qz = points[p, 2]
        acc = 0.0
        hit = False
        for f in range(n_faces):
            ax = tri[f, 0, 0] - qx
            ay = tri[f, 0, 1] - qy
            az = tri[f, 0, 2] - qz
            bx = tri[f, 1, 0] - qx
            by = tri[f, 1, 1] - qy
            bz = tri[f, 1, 2] - qz
            cx = tri[f, 2, 0] - qx
            cy = tri[f, 2, 1] - qy
            cz = tri[f, 2, 2] - qz
            na = np.sqrt(ax * ax + ay * ay + az * az)
            nb = np.sqrt(bx * bx + by * by + bz * bz)
            nc = np.sqrt(cx * cx + cy * cy + cz * cz)
            if na < eps or nb < eps or nc < eps:
                hit = True  # essentially on a vertex; contribution zeroed
                continue
            # Signed distance to the supporting plane; cheap reject for the
            # on-surface test, exact barycentric check only for candidates.
            pd = nhat[f, 0] * qx + nhat[f, 1] * qy + nhat[f, 2] * qz - pld[f]
            if -eps < pd < eps:
                ux = tri[f, 1, 0] - tri[f, 0, 0]
                uy = tri[f, 1, 1] - tri[f, 0, 1]
                uz = tri[f, 1, 2] - tri[f, 0, 2]
                wx = tri[f, 2, 0] - tri[f, 0, 0]
                wy = tri[f, 2, 1] - tri[f, 0, 1]
                wz = tri[f, 2, 2] - tri[f, 0, 2]
                d00 = ux * ux + uy * uy + uz * uz
                d01 = ux * wx + uy * wy + uz * wz
                d11 = wx * wx + wy * wy + wz * wz
                denom = d00 * d11 - d01 * d01  # = |u x w|^2 > 0 here
                ru = -(ax * ux + ay * uy + az * uz)  # (q - v0) . u
                rw = -(ax * wx + ay * wy + az * wz)
                b1 = (d11 * ru - d01 * rw) / denom
                b2 = (d00 * rw - d01 * ru) / denom
                if b1 >= -_BARY_TOL and b2 >= -_BARY_TOL and b1 + b2 <= 1.0 + _BARY_TOL:
                    hit = True
                    continue
            alpha = (
                ax * (by * cz - bz * cy)
                + ay * (bz * cx - bx * cz)
                + az * (bx * cy - by * cx)
            )
            # Grouped so that swapping b and c leaves beta bit-identical
            # (the first bracket is swap-invariant, the second commutes),
            # while alpha negates exactly: orientation flips then negate
            # the whole winding number bit-for-bit, not just approximately.
            beta = (
                na * (nb * nc) + (bx * cx + by * cy + bz * cz) * na
            ) + (
                (ax * bx + ay * by + az * bz) * nc
                + (cx * ax + cy * ay + cz * az) * nb
            )
            if use_atan2:
                acc += 2.0 * np.arctan2(alpha, beta)
            else:
                # Naive single-argument arctan: loses the quadrant, which is
                # exactly the branch-cut artifact the two-argument form fixes.
                if beta != 0.0:
                    acc += 2.0 * np.arctan(alpha / beta)
                elif alpha > 0.0:
                    acc += np.pi
                elif alpha < 0.0:
                    acc -= np.pi
        out[p] = acc / _FOUR_PI
        flags[p] = hit


@njit(cache=True, nogil=True, fastmath=False)
def soft_batch(points, tri, eps, out, flags):
    """Soft (one-dipole-per-face) winding numbers.

    Per face the contribution is  (u x w) . (c - q) / (8 pi |c - q|^3)
    with c the centroid.  Points within ``eps`` of any centroid are flagged;
    flagged points still receive the sum of their unflagged terms.
    """
    n_pts = points.shape[0]
    n_faces = tri.shape[0]
    for p in range(n_pts):
        qx = points[p, 0]
        qy = points[p, 1]
        qz = points[p, 2]
        acc = 0.0
        hit = False
        for f in range(n_faces):
            v0x = tri[f, 0, 0]
            v0y = tri[f, 0, 1]
            v0z = tri[f, 0, 2]
            ux = tri[f, 1, 0] - v0x
            uy = tri[f, 1, 1] - v0y
            uz = tri[f, 1, 2] - v0z
            wx = tri[f, 2, 0] - v0x
            wy = tri[f, 2, 1] - v0y
            wz = tri[f, 2, 2] - v0z
            dx = v0x + (ux + wx) / 3.0 - qx  # centroid - q
            dy = v0y + (uy + wy) / 3.0 - qy
            dz = v0z + (uz + wz) / 3.0 - qz
            r2 = dx * dx + dy * dy + dz * dz
            r = np.sqrt(r2)
            if r < eps:
                hit = True
                continue
            nx = uy * wz - uz * wy
            ny = uz * wx - ux * wz
            nz = ux * wy - uy * wx
            acc += (nx * dx + ny * dy + nz * dz) / (r2 * r)
        out[p] = acc / _EIGHT_PI
        flags[p] = hit


@njit(cache=True, nogil=True, fastmath=False)
def soft_grad_accum(points, coefs, tri, faces, eps, grad):
    """Accumulate per-vertex gradients of the soft winding number.

    For each point p with coefficient coefs[p], adds
    coefs[p] * d W_soft(points[p]) / d v  into ``grad`` (V, 3).  The closed
    form per face, with u = v1-v0, w = v2-v0, N = u x w, d = c - q, r = |d|,
    S = N . d:

        dW/dv_k = (G_k + N/3) / (8 pi r^3) - S d / (8 pi r^5)

    where G_1 = w x d, G_2 = d x u, G_0 = -G_1 - G_2.  Summing over k gives
    N / (8 pi r^3) - 3 S d / (8 pi r^5), which is exactly -dW/dq — the
    translation-invariance sum rule checked in the tests.

    Points with coefficient 0.0 are skipped entirely, so excluded (on
    surface) terms contribute no gradient anywhere.
    """
    n_pts = points.shape[0]
    n_faces = tri.shape[0]
    for p in range(n_pts):
        coef = coefs[p]
        if coef == 0.0:
            continue
        qx = points[p, 0]
        qy = points[p, 1]
        qz = points[p, 2]
        for f in range(n_faces):
            v0x = tri[f, 0, 0]
            v0y = tri[f, 0, 1]
            v0z = tri[f, 0, 2]
            ux = tri[f, 1, 0] - v0x
            uy = tri[f, 1, 1] - v0y
            uz = tri[f, 1, 2] - v0z
            wx = tri[f, 2, 0] - v0x
            wy = tri[f, 2, 1] - v0y
            wz = tri[f, 2, 2] - v0z
            dx = v0x + (ux + wx) / 3.0 - qx
            dy = v0y + (uy + wy) / 3.0 - qy
            dz = v0z + (uz + wz) / 3.0 - qz
            r2 = dx * dx + dy * dy + dz * dz
            r = np.sqrt(r2)
            if r < eps:
                continue
            nx = uy * wz - uz * wy
            ny = uz * wx - ux * wz
            nz = ux * wy - uy * wx
            s = nx * dx + ny * dy + nz * dz
            inv3 = coef / (_EIGHT_PI * r2 * r)
            inv5 = coef * s / (_EIGHT_PI * r2 * r2 * r)
            # G_1 = w x d, G_2 = d x u
            g1x = wy * dz - wz * dy
            g1y = wz * dx - wx * dz
            g1z = wx * dy - wy * dx
            g2x = dy * uz - dz * uy
            g2y = dz * ux - dx * uz
            g2z = dx * uy - dy * ux
            n3x = nx / 3.0
            n3y = ny / 3.0
            n3z = nz / 3.0
            i0 = faces[f, 0]
            i1 = faces[f, 1]
            i2 = faces[f, 2]
            grad[i0, 0] += (-g1x - g2x + n3x) * inv3 - dx * inv5
            grad[i0, 1] += (-g1y - g2y + n3y) * inv3 - dy * inv5
            grad[i0, 2] += (-g1z - g2z + n3z) * inv3 - dz * inv5
            grad[i1, 0] += (g1x + n3x) * inv3 - dx * inv5
            grad[i1, 1] += (g1y + n3y) * inv3 - dy * inv5
            grad[i1, 2] += (g1z + n3z) * inv3 - dz * inv5
            grad[i2, 0] += (g2x + n3x) * inv3 - dx * inv5
            grad[i2, 1] += (g2y + n3y) * inv3 - dy * inv5
            grad[i2, 2] += (g2z + n3z) * inv3 - dz * inv5


@njit(cache=True, nogil=True, fastmath=False)
def exact_batch_f32(points, tri, nhat, pld, eps, out, flags):
    """Single-precision twin of :func:`exact_batch` (ATAN2 path only).

    All arithmetic stays in float32 — constants are hoisted as float32
    scalars so nothing silently promotes — mirroring a reduced-precision
    accumulation mode at desk scale.  Tolerances of the acceptance tests
    assume the float64 kernel; this one trades accuracy for footprint.
    """
    two = np.float32(2.0)
    zero = np.float32(0.0)
    one = np.float32(1.0)
    btol = np.float32(_BARY_TOL)
    four_pi = np.float32(_FOUR_PI)
    n_pts = points.shape[0]
    n_faces = tri.shape[0]
    for p in range(n_pts):
        qx = points[p, 0]
        qy = points[p, 1]
        qz = points[p, 2]
        acc = zero
        hit = False
        for f in range(n_faces):
            ax = tri[f, 0, 0] - qx
            ay = tri[f, 0, 1] - qy
            az = tri[f, 0, 2] - qz
            bx = tri[f, 1, 0] - qx
            by = tri[f, 1, 1] - qy
            bz = tri[f, 1, 2] - qz
            cx = tri[f, 2, 0] - qx
            cy = tri[f, 2, 1] - qy
            cz = tri[f, 2, 2] - qz
            na = np.sqrt(ax * ax + ay * ay + az * az)
            nb = np.sqrt(bx * bx + by * by + bz * bz)
            nc = np.sqrt(cx * cx + cy * cy + cz * cz)
            if na < eps or nb < eps or nc < eps:
                hit = True
                continue
            pd = nhat[f, 0] * qx + nhat[f, 1] * qy + nhat[f, 2] * qz - pld[f]
            if -eps < pd < eps:
                ux = tri[f, 1, 0] - tri[f, 0, 0]
                uy = tri[f, 1, 1] - tri[f, 0, 1]
                uz = tri[f, 1, 2] - tri[f, 0, 2]
                wx = tri[f, 2, 0] - tri[f, 0, 0]
                wy = tri[f, 2, 1] - tri[f, 0, 1]
                wz = tri[f, 2, 2] - tri[f, 0, 2]
                d00 = ux * ux + uy * uy + uz * uz
                d01 = ux * wx + uy * wy + uz * wz
                d11 = wx * wx + wy * wy + wz * wz
                denom = d00 * d11 - d01 * d01
                ru = -(ax * ux + ay * uy + az * uz)
                rw = -(ax * wx + ay * wy + az * wz)
                b1 = (d11 * ru - d01 * rw) / denom
                b2 = (d00 * rw - d01 * ru) / denom
                if b1 >= -btol and b2 >= -btol and b1 + b2 <= one + btol:
                    hit = True
                    continue
            alpha = (
                ax * (by * cz - bz * cy)
                + ay * (bz * cx - bx * cz)
                + az * (bx * cy - by * cx)
            )
            # Grouped so that swapping b and c leaves beta bit-identical
            # (the first bracket is swap-invariant, the second commutes),
            # while alpha negates exactly: orientation flips then negate
            # the whole winding number bit-for-bit, not just approximately.
            beta = (
                na * (nb * nc) + (bx * cx + by * cy + bz * cz) * na
            ) + (
                (ax * bx + ay * by + az * bz) * nc
                + (cx * ax + cy * ay + cz * az) * nb
            )
            acc += two * np.arctan2(alpha, beta)
        out[p] = acc / four_pi
        flags[p] = hit


@njit(cache=True, nogil=True, fastmath=False)
def soft_batch_f32(points, tri, eps, out, flags):
    """Single-precision twin of :func:`soft_batch`."""
    zero = np.float32(0.0)
    three = np.float32(3.0)
    eight_pi = np.float32(_EIGHT_PI)
    n_pts = points.shape[0]
    n_faces = tri.shape[0]
    for p in range(n_pts):
        qx = points[p, 0]
        qy = points[p, 1]
        qz = points[p, 2]
        acc = zero
        hit = False
        for f in range(n_faces):
            v0x = tri[f, 0, 0]
            v0y = tri[f, 0, 1]
            v0z = tri[f, 0, 2]
            ux = tri[f, 1, 0] - v0x
            uy = tri[f, 1, 1] - v0y
            uz = tri[f, 1, 2] - v0z
            wx = tri[f, 2, 0] - v0x
            wy = tri[f, 2, 1] - v0y
            wz = tri[f, 2, 2] - v0z
            dx = v0x + (ux + wx) / three - qx
            dy = v0y + (uy + wy) / three - qy
            dz = v0z + (uz + wz) / three - qz
            r2 = dx * dx + dy * dy + dz * dz
            r = np.sqrt(r2)
            if r < eps:
                hit = True
                continue
            nx = uy * wz - uz * wy
            ny = uz * wx - ux * wz
            nz = ux * wy - uy * wx
            acc += (nx * dx + ny * dy + nz * dz) / (r2 * r)
        out[p] = acc / eight_pi
        flags[p] = hit
