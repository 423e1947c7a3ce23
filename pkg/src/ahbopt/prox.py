"""Proximal machinery: prox evaluation, proximal point runs (convex and
grid-searched nonconvex), and Moreau envelope values and gradients."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (CapabilityError, DeskScaleLimitError, InnerSolveError,
                     InvalidInputError, NumericalFailureError)
from .trace import _atomic_write, _fmt

INNER_MAX_ITERS = 100_000

MAX_GRID_POINTS = 10 ** 6


@dataclass
class PpaRun:
    """One proximal point trajectory.

    ``points[k]`` is the k-th iterate (``points[0]`` the start),
    ``values[k]`` its objective value, and ``step_norms[k]`` the distance
    from the previous iterate (0 at k = 0). Values are checked to be
    nonincreasing up to inner-solve noise.
    """

    tau: float
    points: list
    values: list
    step_norms: list

    def __post_init__(self):
        n = len(self.points)
        if n == 0 or len(self.values) != n or len(self.step_norms) != n:
            raise InvalidInputError("points, values, and step_norms must share a length >= 1")
        slack = 1e-9 * (1.0 + abs(self.values[0]))
        for k in range(1, n):
            if self.values[k] > self.values[k - 1] + slack:
                raise NumericalFailureError(
                    k, f"objective increased at proximal step {k}")

    def write_csv(self, path) -> None:
        """CSV with one coordinate column per dimension, LF endings,
        written atomically."""
        dim = np.asarray(self.points[0]).size
        header = "k," + ",".join(f"x{i}" for i in range(dim)) + ",fval,step_norm"
        lines = [header]
        for k, (pt, val, sn) in enumerate(zip(self.points, self.values, self.step_norms)):
            coords = ",".join(_fmt(c) for c in np.asarray(pt, dtype=float))
            lines.append(f"{k},{coords},{_fmt(val)},{_fmt(sn)}")
        _atomic_write(path, "\n".join(lines) + "\n")


@dataclass(frozen=True)
class GridSpec:
    """Rectangular evaluation grid for the nonconvex proximal search.

    ``lo`` and ``hi`` may be scalars (shared by every axis) or per-axis
    sequences. The total point count is capped at 10^6.
    """

    dim: int
    lo: tuple
    hi: tuple
    points_per_axis: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise InvalidInputError("grid search supports dim 1 or 2 only")
        lo = np.broadcast_to(np.asarray(self.lo, dtype=float), (self.dim,))
        hi = np.broadcast_to(np.asarray(self.hi, dtype=float), (self.dim,))
        if np.any(lo >= hi):
            raise InvalidInputError("each lo must be strictly below its hi")
        object.__setattr__(self, "lo", tuple(float(v) for v in lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in hi))
        if self.points_per_axis < 2:
            raise InvalidInputError("points_per_axis must be at least 2")
        if self.points_per_axis ** self.dim > MAX_GRID_POINTS:
            raise DeskScaleLimitError(
                f"grid would hold {self.points_per_axis ** self.dim} points; "
                f"the cap is {MAX_GRID_POINTS}")

    def points(self) -> np.ndarray:
        """All grid points, ordered by lexicographic axis index."""
        axes = [np.linspace(self.lo[a], self.hi[a], self.points_per_axis)
                for a in range(self.dim)]
        if self.dim == 1:
            return axes[0][:, None]
        g0, g1 = np.meshgrid(axes[0], axes[1], indexing="ij")
        return np.column_stack([g0.ravel(), g1.ravel()])


def prox_point(obj, tau, x) -> np.ndarray:
    """Minimizer of f(z) + |z - x|^2 / (2 tau).

    Uses the objective's exact prox when registered. Otherwise, for a
    smooth convex objective with a Lipschitz bound, runs constant-step
    gradient descent on the strongly convex inner problem (step
    1/(L + 1/tau)) until the inner gradient norm falls below
    1e-12 * (1 + |x|) / tau.
    """
    tau = float(tau)
    if not tau > 0:
        raise InvalidInputError("tau must be positive")
    x = np.asarray(x, dtype=float)
    if obj.prox_fn is not None:
        return obj.prox(tau, x)
    if not (obj.convex_flag and obj.gradient_fn is not None and obj.lipschitz is not None):
        raise CapabilityError(
            "prox_fn", "need an exact prox, or a smooth convex objective "
            "with a Lipschitz bound for the inner solve")
    step = 1.0 / (obj.lipschitz + 1.0 / tau)
    tol = 1e-12 * (1.0 + float(np.linalg.norm(x))) / tau
    z = x.copy()
    for _ in range(INNER_MAX_ITERS):
        g = obj.gradient(z) + (z - x) / tau
        if float(np.linalg.norm(g)) <= tol:
            return z
        z = z - step * g
    raise InnerSolveError(
        f"prox inner solve missed tolerance {tol:g} in {INNER_MAX_ITERS} iterations")


def ppa_run(obj, tau, x0, num_steps) -> PpaRun:
    """Iterate the exact proximal point map num_steps times."""
    num_steps = int(num_steps)
    if num_steps < 0:
        raise InvalidInputError("num_steps must be nonnegative")
    if not obj.convex_flag:
        raise InvalidInputError(
            "the plain proximal point run expects a convex objective; "
            "use ppa_run_nonconvex with a grid otherwise")
    points = [np.asarray(x0, dtype=float)]
    for _ in range(num_steps):
        points.append(prox_point(obj, tau, points[-1]))
    values = [obj.value(p) for p in points]
    step_norms = [0.0] + [float(np.linalg.norm(b - a))
                          for a, b in zip(points[:-1], points[1:])]
    return PpaRun(tau=float(tau), points=points, values=values, step_norms=step_norms)


def ppa_run_nonconvex(obj, tau, x0, num_steps, grid) -> PpaRun:
    """Proximal point run with the inner argmin over an explicit grid.

    The candidate set at every step is the grid plus the previous
    iterate, so the inner objective never increases even though the grid
    is finite. Grid ties resolve to the lexicographically smallest index;
    the previous iterate is kept only when strictly better than every
    grid point.
    """
    tau = float(tau)
    if not tau > 0:
        raise InvalidInputError("tau must be positive")
    num_steps = int(num_steps)
    if num_steps < 0:
        raise InvalidInputError("num_steps must be nonnegative")
    pts = grid.points()
    if np.asarray(x0).size != grid.dim:
        raise InvalidInputError("x0 dimension does not match the grid")
    fvals = np.array([obj.value(p) for p in pts])
    if not np.all(fvals > -np.inf):
        raise InvalidInputError("objective is unbounded below on the grid")
    x = np.asarray(x0, dtype=float)
    fx = obj.value(x)
    points, values, step_norms = [x.copy()], [fx], [0.0]
    for _ in range(num_steps):
        q = fvals + np.sum((pts - x) ** 2, axis=1) / (2.0 * tau)
        best = int(np.argmin(q))
        if q[best] <= fx:
            step_norms.append(float(np.linalg.norm(pts[best] - x)))
            x = pts[best].copy()
            fx = float(fvals[best])
        else:
            step_norms.append(0.0)
        points.append(x.copy())
        values.append(fx)
    return PpaRun(tau=tau, points=points, values=values, step_norms=step_norms)


def moreau_value(obj, lam, x) -> float:
    """Moreau envelope value: f at the prox point plus the quadratic
    penalty that produced it."""
    p = prox_point(obj, lam, x)
    x = np.asarray(x, dtype=float)
    d = p - x
    return obj.value(p) + float(d @ d) / (2.0 * float(lam))


def moreau_gradient(obj, lam, x) -> np.ndarray:
    """Envelope gradient (x - prox(lam, x)) / lam; 1/lam-Lipschitz."""
    x = np.asarray(x, dtype=float)
    return (x - prox_point(obj, lam, x)) / float(lam)
