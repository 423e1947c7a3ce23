"""Parallel-beam line-integral geometry on the unit square.

The image occupies [-1, 1]^2, split into an n-by-n pixel grid. A ray is a
unit-speed straight line; matrix entries are exact ray/pixel intersection
lengths, so each matrix row integrates a piecewise-constant image along
one ray. Pixel (column i, row j) covers
[-1 + i*w, -1 + (i+1)*w] x [-1 + j*w, -1 + (j+1)*w] with w = 2/n and maps
to flat index j*n + i, matching C-order flattening of an (n, n) image
whose rows follow the y axis.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse

# Rays closer than this to a grid line are resolved by segment midpoints;
# shorter chords are dropped as geometric noise.
_EPS = 1e-13


def ray_geometry(num_angles, rays_per_angle):
    """Equally spaced angles in [0, pi) and ray offsets at the centers of
    equal detector bins spanning [-1, 1]."""
    angles = np.arange(num_angles) * (np.pi / num_angles)
    offsets = -1.0 + (np.arange(rays_per_angle) + 0.5) * (2.0 / rays_per_angle)
    return angles, offsets


def _box_interval(origin, direction):
    """Parameter range where origin + t*direction lies in [-1, 1]^2."""
    t_lo, t_hi = -np.inf, np.inf
    for o, d in zip(origin, direction):
        if abs(d) < _EPS:
            if o < -1.0 or o > 1.0:
                return None
            continue
        a, b = (-1.0 - o) / d, (1.0 - o) / d
        if a > b:
            a, b = b, a
        t_lo, t_hi = max(t_lo, a), min(t_hi, b)
    if t_hi <= t_lo + _EPS:
        return None
    return t_lo, t_hi


def intersection_row(n, theta, offset):
    """Flat pixel indices and chord lengths for one ray.

    The ray travels along (cos theta, sin theta) and is shifted by
    `offset` along the perpendicular (-sin theta, cos theta), so theta = 0
    gives horizontal rays sweeping grid rows.
    """
    w = 2.0 / n
    direction = np.array([np.cos(theta), np.sin(theta)])
    origin = offset * np.array([-np.sin(theta), np.cos(theta)])
    span = _box_interval(origin, direction)
    if span is None:
        return np.empty(0, dtype=np.int64), np.empty(0)
    t_lo, t_hi = span
    crossings = [t_lo, t_hi]
    interior = -1.0 + w * np.arange(1, n)
    for axis in range(2):
        if abs(direction[axis]) > _EPS:
            t = (interior - origin[axis]) / direction[axis]
            crossings.extend(t[(t > t_lo) & (t < t_hi)])
    ts = np.sort(np.asarray(crossings))
    idx, wgt = [], []
    for a, b in zip(ts[:-1], ts[1:]):
        if b - a <= _EPS:
            continue
        mid = origin + 0.5 * (a + b) * direction
        i = min(max(int((mid[0] + 1.0) // w), 0), n - 1)
        j = min(max(int((mid[1] + 1.0) // w), 0), n - 1)
        idx.append(j * n + i)
        wgt.append(b - a)
    return np.asarray(idx, dtype=np.int64), np.asarray(wgt)


def system_matrix(n, num_angles, rays_per_angle):
    """Sparse (num_angles * rays_per_angle) x n^2 line-integral matrix,
    rows ordered angle-major then offset."""
    angles, offsets = ray_geometry(num_angles, rays_per_angle)
    rows, cols, vals = [], [], []
    row = 0
    for theta in angles:
        for s in offsets:
            idx, wgt = intersection_row(n, theta, s)
            rows.extend([row] * idx.size)
            cols.extend(idx.tolist())
            vals.extend(wgt.tolist())
            row += 1
    shape = (num_angles * rays_per_angle, n * n)
    return sparse.csr_matrix((vals, (rows, cols)), shape=shape)


def phantom_image(kind, n):
    """Deterministic piecewise-constant n-by-n test images.

    "blocks" overlays two axis-aligned rectangles, "disks" two circles;
    pixel values sample the underlying function at pixel centers.
    """
    centers = -1.0 + (np.arange(n) + 0.5) * (2.0 / n)
    xs, ys = np.meshgrid(centers, centers)
    img = np.zeros((n, n))
    if kind == "blocks":
        img[(xs >= -0.6) & (xs <= -0.1) & (ys >= -0.5) & (ys <= 0.3)] += 1.0
        img[(xs >= 0.15) & (xs <= 0.65) & (ys >= -0.25) & (ys <= 0.35)] += 0.5
    elif kind == "disks":
        img[(xs + 0.3) ** 2 + (ys - 0.2) ** 2 <= 0.35 ** 2] += 1.0
        img[(xs - 0.35) ** 2 + (ys + 0.25) ** 2 <= 0.25 ** 2] += 0.7
    else:
        raise ValueError(f"unknown phantom kind '{kind}'")
    return img
