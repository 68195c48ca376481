"""Alignment-based empirical FPCA and projection-residual experiments.

Alignment minimizes the L2 distance between a template and the
norm-preserving warp of a function, over one of two search families: an
exhaustive grid on the one-parameter warps, or coordinate descent over
piecewise-linear increments seeded from the grid optimum. The residual
experiment compares plain basis projection against projection followed
by warp optimization, as the basis size grows.
"""

from __future__ import annotations

import numpy as np

from .basis import OrthonormalBasis, project_coefficients
from .grid import FunctionSample, TimeGrid, as_values, l2_norm
from .phase import (
    ParametricPhase,
    PhaseFunction,
    PhaseIncrements,
    act_norm_preserving,
    from_increments,
    to_increments,
)

PM1_GRID = "pm1_grid"
PIECEWISE_CD = "piecewise_cd"

_ALPHA_GRID = np.linspace(-0.99, 0.99, 199)
_CD_KNOTS = np.linspace(0.0, 1.0, 7)
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def _cost(f_vals, mu_vals, gamma: PhaseFunction, grid: TimeGrid) -> float:
    warped = np.asarray(act_norm_preserving(f_vals, gamma, grid))
    diff = mu_vals - warped
    return float(np.sum(grid.weights * diff * diff))


def _golden_section(fun, lo: float, hi: float, tol: float = 1e-5) -> tuple[float, float]:
    """Minimize a scalar function on [lo, hi] by golden-section search."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fun(d)
    return (c, fc) if fc < fd else (d, fd)


def align_to_template(f, mu, grid: TimeGrid, family: str = PM1_GRID):
    """Warp minimizing ||mu - (f o gamma) sqrt(gamma')||^2 over the family.

    ``pm1_grid`` searches alpha in {-0.99, ..., 0.99} step 0.01 (the
    identity is included, so the cost never exceeds the unaligned one);
    ``piecewise_cd`` refines that optimum by coordinate descent over
    increments on 7 uniform knots with golden-section line searches.
    Returns (phase, achieved squared distance).
    """
    f_vals = as_values(f, grid)
    mu_vals = as_values(mu, grid)
    # identity first so that cost ties resolve to the unwarped solution
    best_alpha = 0.0
    best_cost = _cost(f_vals, mu_vals, ParametricPhase(0.0), grid)
    for alpha in _ALPHA_GRID:
        c = _cost(f_vals, mu_vals, ParametricPhase(float(alpha)), grid)
        if c < best_cost:
            best_alpha, best_cost = float(alpha), c
    if family == PM1_GRID:
        return ParametricPhase(best_alpha), best_cost
    if family != PIECEWISE_CD:
        raise ValueError(f"unknown alignment family {family!r}")

    knots = _CD_KNOTS
    deltas = to_increments(ParametricPhase(best_alpha), knots).deltas.copy()
    cost = _cost(f_vals, mu_vals, from_increments(PhaseIncrements(deltas, knots)), grid)
    m = deltas.shape[0]
    eps = 1e-4
    for _ in range(20):
        improved = cost
        for j in range(m):
            rest = 1.0 - deltas[j]

            def line_cost(x, j=j, rest=rest):
                trial = deltas * ((1.0 - x) / rest)
                trial[j] = x
                try:
                    gamma = from_increments(PhaseIncrements(trial, knots))
                except ValueError:
                    return np.inf
                return _cost(f_vals, mu_vals, gamma, grid)

            x_star, c_star = _golden_section(line_cost, eps, 1.0 - eps * (m - 1))
            if c_star < cost:
                scale = (1.0 - x_star) / rest
                deltas *= scale
                deltas[j] = x_star
                deltas[-1] = 1.0 - float(np.sum(deltas[:-1]))
                cost = c_star
        if improved - cost < 1e-10:
            break
    return from_increments(PhaseIncrements(deltas, knots)), cost


def centered_mean(dataset, grid: TimeGrid, iters: int, family: str = PM1_GRID) -> FunctionSample:
    """Alternating alignment/averaging estimate of the template.

    Starts at the cross-sectional mean; each round aligns every
    observation to the current template and averages the aligned
    functions. ``iters == 0`` returns the cross-sectional mean.
    """
    data = np.atleast_2d(np.asarray([as_values(f) for f in dataset], dtype=np.float64))
    if data.shape[0] < 1:
        raise ValueError("dataset must be nonempty")
    mu = data.mean(axis=0)
    for _ in range(iters):
        aligned = np.zeros_like(data)
        for i in range(data.shape[0]):
            gamma, _ = align_to_template(data[i], mu, grid, family=family)
            aligned[i] = np.asarray(act_norm_preserving(data[i], gamma, grid))
        mu_new = aligned.mean(axis=0)
        rel = l2_norm(mu_new - mu, grid) / max(l2_norm(mu, grid), 1e-12)
        mu = mu_new
        if rel < 1e-6:
            break
    return FunctionSample(mu)


def fpca_basis(dataset, grid: TimeGrid, mu_bar, num_components: int, family: str = PM1_GRID):
    """Aligned-residual FPCA: returns (components, singular values, energy).

    Each observation is aligned to the template, the residual sample
    covariance (divisor n-1) is decomposed by SVD, and the leading
    ``num_components`` columns are returned with the full spectrum's
    energy fractions.
    """
    data = np.atleast_2d(np.asarray([as_values(f) for f in dataset], dtype=np.float64))
    n = data.shape[0]
    if n < 2:
        raise ValueError("need at least two observations for FPCA")
    mu_vals = as_values(mu_bar, grid)
    resid = np.zeros_like(data)
    for i in range(n):
        gamma, _ = align_to_template(data[i], mu_vals, grid, family=family)
        resid[i] = np.asarray(act_norm_preserving(data[i], gamma, grid)) - mu_vals
    cov = np.cov(resid, rowvar=False, ddof=1)
    u, s, _ = np.linalg.svd(np.atleast_2d(cov))
    total = float(np.sum(s))
    energy = s / total if total > 0.0 else np.zeros_like(s)
    k = min(num_components, u.shape[1])
    return u[:, :k], s[:k], energy


def projection_residual(f, basis: OrthonormalBasis, grid: TimeGrid, optimize_phase: bool, family: str = PM1_GRID) -> float:
    """L2 residual of projecting f onto the basis, optionally after the
    best norm-preserving warp of the projection."""
    f_vals = as_values(f, grid)
    fhat = basis.eval_matrix @ project_coefficients(f_vals, basis)
    if not optimize_phase:
        return l2_norm(f_vals - fhat, grid)
    _, cost = align_to_template(fhat, f_vals, grid, family=family)
    return float(np.sqrt(max(cost, 0.0)))


def residual_sweep(dataset, grid: TimeGrid, make_basis_fn, b_max: int = 30, family: str = PM1_GRID) -> np.ndarray:
    """Average plain and phase-optimized residuals for basis sizes 1..b_max.

    Returns an array of shape (b_max, 3): basis size, mean plain
    residual, mean optimized residual.
    """
    data = np.atleast_2d(np.asarray([as_values(f) for f in dataset], dtype=np.float64))
    out = np.zeros((b_max, 3))
    for b in range(1, b_max + 1):
        basis = make_basis_fn(b)
        plain = np.mean([projection_residual(f, basis, grid, False) for f in data])
        opt = np.mean([projection_residual(f, basis, grid, True, family=family) for f in data])
        out[b - 1] = (b, plain, opt)
    return out
