"""Time discretization, quadrature and interpolation primitives.

All L2 quantities in the package are computed against a :class:`TimeGrid`
holding sample times on [0, 1] and trapezoid quadrature weights. Values
are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing sample times t_1=0 < ... < t_T=1 with weights."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = _readonly(self.points)
        wts = _readonly(self.weights)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)
        if pts.ndim != 1 or pts.shape[0] < 2:
            raise DimensionError("grid needs at least two points")
        if pts[0] != 0.0 or pts[-1] != 1.0:
            raise DomainError("grid must start at 0 and end at 1")
        if np.any(np.diff(pts) <= 0.0):
            raise DomainError("grid points must be strictly increasing")
        if wts.shape != pts.shape:
            raise DimensionError("weights length must match points length")
        if abs(float(wts.sum()) - 1.0) > 1e-12:
            raise DomainError("quadrature weights must sum to 1")

    @classmethod
    def from_points(cls, points) -> "TimeGrid":
        """Build a grid with trapezoid-rule weights from sample times."""
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 1 or pts.shape[0] < 2:
            raise DimensionError("grid needs at least two points")
        dt = np.diff(pts)
        wts = np.zeros_like(pts)
        wts[:-1] += 0.5 * dt
        wts[1:] += 0.5 * dt
        return cls(pts, wts)

    @classmethod
    def uniform(cls, num_points: int) -> "TimeGrid":
        return cls.from_points(np.linspace(0.0, 1.0, num_points))

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class FunctionSample:
    """Function values aligned to a TimeGrid."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __len__(self) -> int:
        return self.values.shape[0]


def as_values(f, grid: TimeGrid | None = None) -> np.ndarray:
    """Coerce a FunctionSample or array to a float vector, checking length."""
    vals = f.values if isinstance(f, FunctionSample) else np.asarray(f, dtype=np.float64)
    if vals.ndim != 1:
        raise DimensionError("function sample must be a vector")
    if grid is not None and vals.shape[0] != len(grid):
        raise DimensionError(
            f"sample length {vals.shape[0]} does not match grid length {len(grid)}"
        )
    return vals


def inner_product(f, g, grid: TimeGrid) -> float:
    """Trapezoid-rule approximation of the L2 inner product on [0, 1]."""
    fv = as_values(f, grid)
    gv = as_values(g, grid)
    return float(np.sum(grid.weights * fv * gv))


def l2_norm(f, grid: TimeGrid) -> float:
    """Quadrature L2 norm, sqrt(<f, f>)."""
    return float(np.sqrt(max(inner_product(f, f, grid), 0.0)))


def interp_linear(f, grid: TimeGrid, t) -> float | np.ndarray:
    """Piecewise-linear interpolation of f at t in [0, 1]; exact at grid points."""
    fv = as_values(f, grid)
    tv = np.asarray(t, dtype=np.float64)
    if np.any(tv < 0.0) or np.any(tv > 1.0):
        raise DomainError("interpolation point outside [0, 1]")
    out = np.interp(tv, grid.points, fv)
    return float(out) if np.isscalar(t) or tv.ndim == 0 else out
