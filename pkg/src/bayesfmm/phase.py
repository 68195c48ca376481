"""Phase functions (warps) of [0, 1] and their group actions on samples.

Two families are used as priors: a one-parameter polynomial warp
t + alpha*t*(t-1) with |alpha| < 1, and piecewise-linear warps built
from positive increments on a fixed knot set (drawn from a Dirichlet
distribution). Composition and inversion close only in the
piecewise-linear family, so those operations always return a
:class:`PiecewiseLinearPhase`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from . import kernels
from .errors import DegeneratePhaseError, DomainError
from .grid import FunctionSample, TimeGrid, as_values

SLOPE_FLOOR = 1e-8


def _check_domain(t: np.ndarray):
    if t.size and (np.min(t) < 0.0 or np.max(t) > 1.0):
        raise DomainError("phase evaluation point outside [0, 1]")


@dataclass(frozen=True)
class ParametricPhase:
    """One-parameter warp t + alpha*t*(t-1); identity at alpha = 0."""

    alpha: float

    def __post_init__(self):
        if not -1.0 < self.alpha < 1.0:
            raise DegeneratePhaseError("parametric warp needs |alpha| < 1")

    def eval(self, t):
        tv = np.asarray(t, dtype=np.float64)
        _check_domain(np.atleast_1d(tv))
        return tv + self.alpha * tv * (tv - 1.0)

    def deriv(self, t):
        tv = np.asarray(t, dtype=np.float64)
        _check_domain(np.atleast_1d(tv))
        return 1.0 + self.alpha * (2.0 * tv - 1.0)


@dataclass(frozen=True)
class PiecewiseLinearPhase:
    """Piecewise-linear warp through (knots, values); strictly increasing."""

    knots: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        kn = np.array(self.knots, dtype=np.float64)
        va = np.array(self.values, dtype=np.float64)
        kn.setflags(write=False)
        va.setflags(write=False)
        object.__setattr__(self, "knots", kn)
        object.__setattr__(self, "values", va)
        if kn.ndim != 1 or kn.shape[0] < 2 or va.shape != kn.shape:
            raise DegeneratePhaseError("knots and values must be matching vectors")
        if kn[0] != 0.0 or kn[-1] != 1.0 or np.any(np.diff(kn) <= 0.0):
            raise DegeneratePhaseError("knots must increase strictly from 0 to 1")
        if va[0] != 0.0 or va[-1] != 1.0:
            raise DegeneratePhaseError("warp must fix the endpoints 0 and 1")
        if np.any(np.diff(va) <= 0.0):
            raise DegeneratePhaseError("warp values must be strictly increasing")

    def eval(self, t):
        tv = np.asarray(t, dtype=np.float64)
        _check_domain(np.atleast_1d(tv))
        return np.interp(tv, self.knots, self.values)

    def deriv(self, t):
        """Right-continuous segment slope; left slope at t = 1."""
        tv = np.asarray(t, dtype=np.float64)
        _check_domain(np.atleast_1d(tv))
        out = kernels.piecewise_slopes(self.knots, self.values, np.atleast_1d(tv))
        return float(out[0]) if tv.ndim == 0 else out


PhaseFunction = Union[ParametricPhase, PiecewiseLinearPhase]


def identity_phase() -> ParametricPhase:
    return ParametricPhase(0.0)


@dataclass(frozen=True)
class PhaseIncrements:
    """Positive warp increments over a knot set, summing to one."""

    deltas: np.ndarray
    knots: np.ndarray

    def __post_init__(self):
        de = np.array(self.deltas, dtype=np.float64)
        kn = np.array(self.knots, dtype=np.float64)
        de.setflags(write=False)
        kn.setflags(write=False)
        object.__setattr__(self, "deltas", de)
        object.__setattr__(self, "knots", kn)
        if kn.shape[0] != de.shape[0] + 1:
            raise DegeneratePhaseError("need one more knot than increments")
        if kn[0] != 0.0 or kn[-1] != 1.0 or np.any(np.diff(kn) <= 0.0):
            raise DegeneratePhaseError("knots must increase strictly from 0 to 1")
        if np.any(de <= 0.0):
            raise DegeneratePhaseError("increments must be positive")
        if abs(float(de.sum()) - 1.0) > 1e-12:
            raise DegeneratePhaseError("increments must sum to 1")


def compose(gamma1: PhaseFunction, gamma2: PhaseFunction, resolution: int) -> PiecewiseLinearPhase:
    """Piecewise-linear sampling of t -> gamma1(gamma2(t)) at uniform knots."""
    ts = np.linspace(0.0, 1.0, resolution)
    vals = np.asarray(gamma1.eval(gamma2.eval(ts)), dtype=np.float64)
    vals[0], vals[-1] = 0.0, 1.0
    return PiecewiseLinearPhase(ts, vals)


def compose_exact(gamma1: PiecewiseLinearPhase, gamma2: PiecewiseLinearPhase) -> PiecewiseLinearPhase:
    """Exact composition of two piecewise-linear warps (union of breakpoints)."""
    inner_pre = np.interp(gamma1.knots, gamma2.values, gamma2.knots)
    ts = np.unique(np.concatenate([gamma2.knots, inner_pre]))
    vals = np.asarray(gamma1.eval(gamma2.eval(ts)), dtype=np.float64)
    vals[0], vals[-1] = 0.0, 1.0
    return PiecewiseLinearPhase(ts, vals)


def invert(gamma: PhaseFunction, resolution: int) -> PiecewiseLinearPhase:
    """Piecewise-linear inverse, resampled at uniform knots."""
    if isinstance(gamma, PiecewiseLinearPhase):
        src_t, src_y = gamma.knots, gamma.values
    else:
        src_t = np.linspace(0.0, 1.0, resolution)
        src_y = np.asarray(gamma.eval(src_t), dtype=np.float64)
    if np.any(np.diff(src_y) <= 0.0):
        raise DegeneratePhaseError("cannot invert a warp with non-increasing samples")
    ts = np.linspace(0.0, 1.0, resolution)
    vals = np.interp(ts, src_y, src_t)
    vals[0], vals[-1] = 0.0, 1.0
    return PiecewiseLinearPhase(ts, vals)


def invert_exact(gamma: PiecewiseLinearPhase) -> PiecewiseLinearPhase:
    """Exact inverse of a piecewise-linear warp (swap knots and values)."""
    return PiecewiseLinearPhase(gamma.values, gamma.knots)


def act_norm_preserving(f, gamma: PhaseFunction, grid: TimeGrid) -> FunctionSample:
    """Unitary action (f o gamma) * sqrt(gamma'); preserves the L2 norm."""
    fv = as_values(f, grid)
    warped = np.interp(gamma.eval(grid.points), grid.points, fv)
    return FunctionSample(warped * np.sqrt(gamma.deriv(grid.points)))


def act_value_preserving(f, gamma: PhaseFunction, grid: TimeGrid) -> FunctionSample:
    """Composition action f o gamma; relabels time, preserves values."""
    fv = as_values(f, grid)
    return FunctionSample(np.interp(gamma.eval(grid.points), grid.points, fv))


def act_area_preserving(f, gamma: PhaseFunction, grid: TimeGrid) -> FunctionSample:
    """Density action (f o gamma) * gamma'; preserves the integral."""
    fv = as_values(f, grid)
    warped = np.interp(gamma.eval(grid.points), grid.points, fv)
    return FunctionSample(warped * gamma.deriv(grid.points))


def to_increments(gamma: PhaseFunction, knots) -> PhaseIncrements:
    """Warp increments gamma(k_{j+1}) - gamma(k_j); the last one is the remainder."""
    kn = np.asarray(knots, dtype=np.float64)
    vals = np.asarray(gamma.eval(kn), dtype=np.float64)
    deltas = np.diff(vals)
    deltas[-1] = 1.0 - float(vals[-2])
    if np.any(deltas <= 0.0):
        raise DegeneratePhaseError("warp has a non-positive increment on these knots")
    return PhaseIncrements(deltas, kn)


def from_increments(inc: PhaseIncrements) -> PiecewiseLinearPhase:
    """Rebuild the piecewise-linear warp from increments; exact roundtrip."""
    spacings = np.diff(inc.knots)
    if np.any(inc.deltas / spacings < SLOPE_FLOOR):
        raise DegeneratePhaseError(f"increment implies slope below {SLOPE_FLOOR}")
    vals = np.concatenate([[0.0], np.cumsum(inc.deltas)])
    vals[-1] = 1.0
    return PiecewiseLinearPhase(inc.knots, vals)


def sample_dirichlet_phase(theta: float, knots, rng: np.random.Generator) -> PiecewiseLinearPhase:
    """Draw a piecewise-linear warp with Dirichlet(theta * knot spacings) increments."""
    if theta <= 0.0:
        raise ValueError("Dirichlet concentration must be positive")
    kn = np.asarray(knots, dtype=np.float64)
    spacings = np.diff(kn)
    if kn[0] != 0.0 or kn[-1] != 1.0 or np.any(spacings <= 0.0):
        raise ValueError("knots must increase strictly from 0 to 1")
    for _ in range(100):
        deltas = rng.dirichlet(theta * spacings)
        if np.all(deltas / spacings >= SLOPE_FLOOR):
            return from_increments(PhaseIncrements(deltas, kn))
    raise DegeneratePhaseError("could not draw a warp above the slope floor")


def mean_phase(phases: list[PhaseFunction], grid: TimeGrid) -> PiecewiseLinearPhase:
    """Pointwise average of warp values on the grid; stays in the group."""
    if not phases:
        raise ValueError("need at least one phase to average")
    acc = np.zeros(len(grid))
    for g in phases:
        acc += np.asarray(g.eval(grid.points), dtype=np.float64)
    vals = acc / len(phases)
    vals[0], vals[-1] = 0.0, 1.0
    return PiecewiseLinearPhase(grid.points, vals)
