"""Posterior post-processing: centering, summaries, accuracy metric.

The fixed effect is only identified up to a norm-preserving warp, so
every kept draw of mu is pushed through the average of all sampled
warps before summarizing. The accuracy metric is the left-Riemann
squared error sum used to score estimates against a known truth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import OrthonormalBasis
from .errors import DimensionError
from .grid import FunctionSample, TimeGrid, as_values
from .mcmc import PosteriorDraws
from .model import PM1
from .phase import ParametricPhase, PiecewiseLinearPhase, act_norm_preserving


@dataclass(frozen=True)
class CenteredMuDraws:
    """Centered fixed-effect draws on the grid, plus the centering warp."""

    mu: np.ndarray
    gamma_bar: PiecewiseLinearPhase
    grid: TimeGrid


def mean_phase_of_draws(draws: PosteriorDraws, grid: TimeGrid) -> PiecewiseLinearPhase:
    """Pointwise mean warp over all kept draws and observations.

    Both warp families are linear in their parameters, so the mean warp
    equals the warp of the mean parameters; this avoids materializing
    kept x n phase objects.
    """
    if draws.n_kept == 0:
        raise ValueError("no kept draws to center")
    t = grid.points
    if draws.prior_model == PM1:
        abar = float(np.mean(draws.phase_params))
        vals = t + abar * t * (t - 1.0)
    else:
        mean_inc = draws.phase_params.reshape(-1, draws.phase_params.shape[-1]).mean(axis=0)
        knot_vals = np.concatenate([[0.0], np.cumsum(mean_inc)])
        knot_vals[-1] = 1.0
        vals = np.interp(t, draws.phase_knots, knot_vals)
    vals = np.asarray(vals, dtype=np.float64)
    vals[0], vals[-1] = 0.0, 1.0
    return PiecewiseLinearPhase(t, vals)


def center_mu(draws: PosteriorDraws, fixed_basis: OrthonormalBasis, grid: TimeGrid) -> CenteredMuDraws:
    """Evaluate each kept mu draw at gamma_bar(t) scaled by sqrt(gamma_bar')."""
    gamma_bar = mean_phase_of_draws(draws, grid)
    warped_eval = fixed_basis.eval_at(gamma_bar.eval(grid.points))
    root = np.sqrt(np.asarray(gamma_bar.deriv(grid.points)))
    mu = (draws.a @ warped_eval.T) * root[None, :]
    return CenteredMuDraws(mu=mu, gamma_bar=gamma_bar, grid=grid)


def pointwise_summary(centered: CenteredMuDraws):
    """Pointwise mean and empirical 2.5/97.5 percent quantile band."""
    if centered.mu.shape[0] < 2:
        raise ValueError("need at least two draws for a summary")
    mean = centered.mu.mean(axis=0)
    lower = np.quantile(centered.mu, 0.025, axis=0)
    upper = np.quantile(centered.mu, 0.975, axis=0)
    return FunctionSample(mean), FunctionSample(lower), FunctionSample(upper)


def delta_mu(estimate, truth, grid: TimeGrid) -> float:
    """Left-Riemann sum of the squared error (the last grid point is excluded)."""
    ev = as_values(estimate, grid)
    tv = as_values(truth, grid)
    if ev.shape != tv.shape:
        raise DimensionError("estimate and truth must share the grid")
    diff = ev - tv
    return float(np.sum(diff[:-1] ** 2 * np.diff(grid.points)))


def aligned_delta_mu(estimate, truth, grid: TimeGrid) -> tuple[float, float]:
    """Best delta_mu over one-parameter warps of the estimate (grid search).

    Returns (error, alpha). The identifiable target is an equivalence
    class, so a residual warp may remain after centering; this reports
    how much of the error it explains. The unaligned delta_mu is the
    primary number.
    """
    best = (np.inf, 0.0)
    for alpha in np.linspace(-0.99, 0.99, 199):
        rotated = act_norm_preserving(estimate, ParametricPhase(float(alpha)), grid)
        err = delta_mu(rotated, truth, grid)
        if err < best[0]:
            best = (err, float(alpha))
    return best


def rotated_fit(
    draws: PosteriorDraws, obs_index: int, fixed_basis: OrthonormalBasis, grid: TimeGrid
) -> list[FunctionSample]:
    """Per-draw mu rotated by that draw's warp for one observation.

    These overlay the raw observation: the warp maps the population
    template into the observation's own coordinate system.
    """
    if not 0 <= obs_index < draws.n_obs:
        raise IndexError(f"observation index {obs_index} out of range")
    out = []
    for k in range(draws.n_kept):
        mu_k = fixed_basis.eval_matrix @ draws.a[k]
        gamma = draws.phase_function(k, obs_index)
        out.append(act_norm_preserving(mu_k, gamma, grid))
    return out
