"""Marginalized observation model: likelihood, priors, warped designs.

Each observation is modelled as a Gaussian vector with mean ``Phi_i a``
and covariance ``sigma2 * diag(gamma_dot_i) + sigmac2 * PhiTilde_i @
PhiTilde_i.T``, where the design matrices hold the fixed/random basis
functions evaluated at warped times and scaled by sqrt(gamma_dot). The
random-effect coefficients are marginalized out, so the likelihood is a
function of (a, sigma2, sigmac2, phases) only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import kernels
from .basis import OrthonormalBasis, make_basis
from .errors import DimensionError, NumericalError
from .grid import TimeGrid, as_values
from .phase import PhaseFunction, to_increments

PM1 = "pm1"
PM2 = "pm2"

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class ModelConfig:
    """Model structure and prior hyperparameters."""

    b_fixed: int = 6
    b_random: int = 6
    fixed_basis: str = "fourier"
    random_basis: str = "bspline"
    prior_model: str = PM1
    t_gamma: int = 5
    theta_gamma: float = 30.0
    prior_var_a: float = 10000.0
    ig_shape: float = 0.01
    ig_scale: float = 0.01

    def __post_init__(self):
        if self.b_fixed < 1 or self.b_random < 1:
            raise ValueError("basis counts must be at least 1")
        if self.prior_model not in (PM1, PM2):
            raise ValueError(f"unknown prior model {self.prior_model!r}")
        if self.t_gamma < 2:
            raise ValueError("need at least two warp knots")
        for name in ("theta_gamma", "prior_var_a", "ig_shape", "ig_scale"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")

    def phase_knots(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.t_gamma)


@dataclass
class ModelState:
    """Current parameter values: coefficients, variances, per-observation warps.

    Zero variances are allowed so noiseless simulation truths and the
    pure measurement-error model (sigmac2 = 0) can be represented; the
    likelihood itself requires sigma2 > 0.
    """

    a: np.ndarray
    sigma2: float
    sigmac2: float
    phases: list[PhaseFunction] = field(default_factory=list)

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=np.float64)
        if self.sigma2 < 0.0 or self.sigmac2 < 0.0:
            raise ValueError("variances must be nonnegative")


@dataclass(frozen=True)
class WarpedDesign:
    """Basis evaluations at warped times, scaled by sqrt(gamma_dot)."""

    phi: np.ndarray
    phi_tilde: np.ndarray
    gamma_dot: np.ndarray


def build_bases(config: ModelConfig, grid: TimeGrid) -> tuple[OrthonormalBasis, OrthonormalBasis]:
    fixed = make_basis(config.fixed_basis, config.b_fixed, grid)
    random = make_basis(config.random_basis, config.b_random, grid)
    return fixed, random


def warped_design(
    fixed: OrthonormalBasis,
    random: OrthonormalBasis,
    gamma: PhaseFunction,
    grid: TimeGrid,
) -> WarpedDesign:
    """Evaluate both bases at gamma(t_j) and scale rows by sqrt(gamma_dot)."""
    warped_t = np.asarray(gamma.eval(grid.points), dtype=np.float64)
    gdot = np.atleast_1d(np.asarray(gamma.deriv(grid.points), dtype=np.float64))
    if gdot.shape[0] == 1 and len(grid) > 1:
        gdot = np.full(len(grid), gdot[0])
    root = np.sqrt(gdot)[:, None]
    return WarpedDesign(
        phi=fixed.eval_at(warped_t) * root,
        phi_tilde=random.eval_at(warped_t) * root,
        gamma_dot=gdot,
    )


def _dense_loglik(resid, gdot, sigma2, sigmac2, phit) -> float:
    cov = sigmac2 * (phit @ phit.T)
    cov[np.diag_indices_from(cov)] += sigma2 * gdot
    for attempt in range(2):
        try:
            factor = scipy.linalg.cho_factor(cov, lower=True)
            break
        except scipy.linalg.LinAlgError:
            if attempt == 1:
                raise NumericalError("covariance not positive definite after jitter")
            cov[np.diag_indices_from(cov)] += 1e-10 * np.trace(cov) / cov.shape[0]
    quad = float(resid @ scipy.linalg.cho_solve(factor, resid))
    logdet = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
    return -0.5 * (resid.shape[0] * _LOG_2PI + logdet + quad)


def marginal_loglik_one(
    f,
    a: np.ndarray,
    sigma2: float,
    sigmac2: float,
    design: WarpedDesign,
    grid: TimeGrid | None = None,
    method: str = "auto",
) -> float:
    """Log density of one observation under the marginalized Gaussian model.

    ``method`` selects the covariance factorization: "woodbury" costs
    O(T * Br^2), "dense" O(T^3); "auto" uses Woodbury when the random
    basis is small (Br < T/4). Both agree to ~1e-8.
    """
    fv = as_values(f, grid)
    T = fv.shape[0]
    if design.phi.shape[0] != T:
        raise DimensionError("design and sample lengths differ")
    resid = fv - design.phi @ a
    if method == "auto":
        method = "woodbury" if design.phi_tilde.shape[1] < T / 4 else "dense"
    if method == "dense":
        return _dense_loglik(resid, design.gamma_dot, sigma2, sigmac2, design.phi_tilde)
    if method != "woodbury":
        raise ValueError(f"unknown method {method!r}")
    out = kernels.loglik_resid(resid, design.gamma_dot, sigma2, sigmac2, design.phi_tilde)
    if math.isnan(out):
        raise NumericalError("covariance factorization failed")
    return out


def total_loglik(dataset, state: ModelState, bases, grid: TimeGrid) -> float:
    """Sum of per-observation marginal log likelihoods with each warp's design."""
    fixed, random = bases
    total = 0.0
    for f, gamma in zip(dataset, state.phases, strict=True):
        design = warped_design(fixed, random, gamma, grid)
        total += marginal_loglik_one(f, state.a, state.sigma2, state.sigmac2, design, grid)
    return total


def invgamma_logpdf(x: float, shape: float, scale: float) -> float:
    """Log density of IG(shape, scale) with density ~ x^(-shape-1) exp(-scale/x)."""
    if x <= 0.0:
        return -math.inf
    return shape * math.log(scale) - math.lgamma(shape) - (shape + 1.0) * math.log(x) - scale / x


def dirichlet_logpdf(x: np.ndarray, alpha: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    if np.any(x <= 0.0):
        return -math.inf
    alpha = np.asarray(alpha, dtype=np.float64)
    return float(
        math.lgamma(float(alpha.sum()))
        - np.sum([math.lgamma(av) for av in alpha])
        + np.sum((alpha - 1.0) * np.log(x))
    )


def mvn_iso_logpdf(a: np.ndarray, variance: float) -> float:
    a = np.asarray(a, dtype=np.float64)
    return -0.5 * (a.shape[0] * math.log(2.0 * math.pi * variance) + float(a @ a) / variance)


def uniform_alpha_logpdf(alpha: float) -> float:
    """Support indicator of the one-parameter warp prior on (-1, 1)."""
    return 0.0 if -1.0 < alpha < 1.0 else -math.inf


def log_prior(state: ModelState, config: ModelConfig) -> float:
    """Joint log prior; -inf encodes out-of-support states."""
    out = mvn_iso_logpdf(state.a, config.prior_var_a)
    out += invgamma_logpdf(state.sigma2, config.ig_shape, config.ig_scale)
    out += invgamma_logpdf(state.sigmac2, config.ig_shape, config.ig_scale)
    if config.prior_model == PM1:
        for gamma in state.phases:
            out += uniform_alpha_logpdf(gamma.alpha)
    else:
        knots = config.phase_knots()
        alpha = config.theta_gamma * np.diff(knots)
        for gamma in state.phases:
            inc = to_increments(gamma, knots)
            out += dirichlet_logpdf(inc.deltas, alpha)
    return out
