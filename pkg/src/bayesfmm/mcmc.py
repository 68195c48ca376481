"""Adaptive Metropolis-Hastings sampler for the warped mixed model.

One sweep updates, in order: the fixed-effect coefficients (multivariate
random walk), the two variance parameters (positive-truncated normal
random walks with the exact asymmetry correction), and each
observation's warp. Warps move either by a uniform window on the
one-parameter family (pm1), or by right-composition with a random
Dirichlet-increment warp (pm2), whose acceptance ratio carries the two
Dirichlet proposal densities and the triangular Jacobian determinants of
the increment map.

Proposal scales adapt during burn-in only: the coefficient proposal
covariance tracks the empirical covariance of the recent draws (times
2.38^2/B and a global scale steered toward the vector acceptance
target), while scalar step sizes are nudged by factors of 1.1 toward the
scalar acceptance target. One rng stream per chain, consumed in a fixed
sweep order, makes runs bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .errors import NumericalError
from .grid import TimeGrid, as_values
from .model import (
    PM1,
    PM2,
    ModelConfig,
    ModelState,
    build_bases,
    invgamma_logpdf,
    mvn_iso_logpdf,
    uniform_alpha_logpdf,
    warped_design,
)
from .phase import (
    SLOPE_FLOOR,
    ParametricPhase,
    PhaseFunction,
    PhaseIncrements,
    PiecewiseLinearPhase,
    from_increments,
    invert,
    invert_exact,
)

_SQRT2 = math.sqrt(2.0)


def _log_norm_cdf(x: float) -> float:
    return math.log(0.5 * (1.0 + math.erf(x / _SQRT2)))


def truncnorm_log_correction(cur: float, can: float, tau: float) -> float:
    """Log of the Hastings correction Phi(cur/tau)/Phi(can/tau) for the
    positive-truncated normal random walk."""
    return _log_norm_cdf(cur / tau) - _log_norm_cdf(can / tau)


def _mh_accept(log_ratio: float, rng: np.random.Generator) -> bool:
    """Metropolis accept/reject. Numerical failures (nan) count as
    rejections; the uniform is drawn only when the decision is not
    already forced, which keeps the rng stream layout simple."""
    if math.isnan(log_ratio) or log_ratio == -math.inf:
        return False
    if log_ratio >= 0.0:
        return True
    return math.log(1.0 - rng.uniform()) < log_ratio


@dataclass
class ProposalConfig:
    """Proposal scales; adapted in place during burn-in."""

    sigma_a: np.ndarray | None = None
    tau2_sigma: float = 0.01
    tau2_sigmac: float = 0.01
    delta: float = 0.1
    alpha_prop: float = 200.0
    adapt_interval: int = 500
    target_accept_scalar: float = 0.44
    target_accept_vector: float = 0.23
    scale_a: float = 1.0

    def __post_init__(self):
        for name in ("tau2_sigma", "tau2_sigmac", "delta", "alpha_prop", "scale_a"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.adapt_interval < 1:
            raise ValueError("adapt_interval must be at least 1")


@dataclass
class ChainConfig:
    n_total: int
    n_burn: int
    thin: int = 1
    seed: int = 0

    def __post_init__(self):
        # n_burn == n_total is allowed: adaptation-only run with no kept draws
        if not 0 <= self.n_burn <= self.n_total:
            raise ValueError("need 0 <= n_burn <= n_total")
        if self.thin < 1:
            raise ValueError("thin must be at least 1")

    @property
    def n_kept(self) -> int:
        return (self.n_total - self.n_burn) // self.thin


@dataclass
class PosteriorDraws:
    """Kept draws plus acceptance statistics and seed provenance.

    ``phase_params`` holds alphas (kept, n) under pm1 and increment
    matrices (kept, n, t_gamma - 1) under pm2.
    """

    a: np.ndarray
    sigma2: np.ndarray
    sigmac2: np.ndarray
    phase_params: np.ndarray
    prior_model: str
    phase_knots: np.ndarray | None
    acceptance: dict[str, float]
    accept_counts: dict[str, tuple[int, int]]
    proposal: ProposalConfig
    seed: int

    @property
    def n_kept(self) -> int:
        return self.a.shape[0]

    @property
    def n_obs(self) -> int:
        return self.phase_params.shape[1]

    def phase_function(self, k: int, i: int) -> PhaseFunction:
        if self.prior_model == PM1:
            return ParametricPhase(float(self.phase_params[k, i]))
        return from_increments(PhaseIncrements(self.phase_params[k, i], self.phase_knots))


def _transition_increments_values(knots, vals_from, vals_to) -> np.ndarray:
    u = np.interp(vals_to, vals_from, knots)
    deltas = np.diff(u)
    deltas[-1] = 1.0 - float(u[-2])
    return deltas


def transition_increments(gamma_from: PiecewiseLinearPhase, gamma_to: PiecewiseLinearPhase) -> np.ndarray:
    """Increments of gamma_from^{-1} o gamma_to on gamma_to's knots.

    For a composition proposal gamma_to = gamma_from o w this recovers
    the increments of the innovation warp w exactly.
    """
    u = invert_exact(gamma_from).eval(gamma_to.values)
    deltas = np.diff(u)
    deltas[-1] = 1.0 - float(u[-2])
    return deltas


def _jacobian_logdet_values(knots, vals_ref, deltas) -> float:
    """Free-coordinate Jacobian used inside the acceptance ratio.

    The Dirichlet density is with respect to Lebesgue measure on the
    simplex, which has one fewer free coordinate than increments: the
    final cumulative sum is pinned at 1 and contributes no factor.
    (Including it biases the warp chain away from its prior; the
    prior-reproduction suite fails with the extra term.) The slopes of
    the inverse warp are the slopes of (values, knots) swapped.
    """
    cums = np.cumsum(deltas)[:-1]
    slopes = kernels.piecewise_slopes(vals_ref, knots, cums)
    return float(np.sum(np.log(slopes)))


def _dirichlet_logpdf_fast(x: np.ndarray, alpha_minus_1: np.ndarray, lognorm: float) -> float:
    if np.min(x) <= 0.0:
        return -math.inf
    return lognorm + float(alpha_minus_1 @ np.log(x))


def _dirichlet_lognorm(alpha: np.ndarray) -> float:
    return math.lgamma(float(np.sum(alpha))) - float(np.sum([math.lgamma(v) for v in alpha]))


def _fast_basis_eval(basis):
    """Closure evaluating the orthonormal basis without per-call validation.

    Warp evaluations stay inside [0, 1] by construction, so the domain
    checks of eval_basis_at are skipped on the sampler's hot path.
    """
    coef = basis.coef
    count = basis.count
    if basis.kind == "fourier":
        return lambda times: kernels.modified_fourier(times, count) @ coef
    if basis.kind == "bspline":
        knots = basis.knots
        return lambda times: kernels.bspline(times, knots, count) @ coef
    return basis.eval_at


def jacobian_logdet(gamma_ref: PhaseFunction, increments, resolution: int = 4097) -> float:
    """Log determinant of the increment map's triangular Jacobian.

    The map sends increments x to the increments of gamma_ref^{-1} at
    their cumulative sums; treating all components as unconstrained
    coordinates, its Jacobian is lower triangular with the inverse-warp
    slopes on the diagonal, so the log determinant sums
    log d/dt gamma_ref^{-1} over every cumulative point (the last one is
    1, where the left slope applies). Note the acceptance ratio uses the
    restriction to the simplex's free coordinates, which drops the final
    point; see _jacobian_logdet_values. Piecewise-linear references are
    inverted exactly; others through invert() at the given resolution.
    """
    deltas = increments.deltas if isinstance(increments, PhaseIncrements) else np.asarray(increments)
    if isinstance(gamma_ref, PiecewiseLinearPhase):
        inv = invert_exact(gamma_ref)
    else:
        inv = invert(gamma_ref, resolution)
    cums = np.cumsum(deltas)
    cums[-1] = 1.0
    slopes = np.atleast_1d(inv.deriv(cums))
    if np.any(slopes <= 0.0):
        raise NumericalError("inverse warp has non-positive slope")
    return float(np.sum(np.log(slopes)))


class MetropolisSampler:
    """Holds the chain state plus cached designs and per-observation
    log likelihoods, so each proposal evaluates the likelihood once.

    ``flat_likelihood=True`` replaces every likelihood value by zero
    (and skips design building); the chain then samples the prior,
    which is how the acceptance-ratio machinery is validated.
    """

    def __init__(
        self,
        dataset,
        config: ModelConfig,
        prop: ProposalConfig | None = None,
        grid: TimeGrid | None = None,
        flat_likelihood: bool = False,
        init_state: ModelState | None = None,
    ):
        data = np.atleast_2d(np.array([as_values(f) for f in dataset], dtype=np.float64))
        if grid is None:
            grid = TimeGrid.uniform(data.shape[1])
        if data.shape[1] != len(grid):
            raise ValueError("dataset columns must match the grid")
        self.data = data
        self.config = config
        self.grid = grid
        self.flat = flat_likelihood
        self.n_obs, self.n_times = data.shape
        self.prop = prop if prop is not None else ProposalConfig()
        if self.prop.sigma_a is None:
            self.prop.sigma_a = 1e-4 * np.eye(config.b_fixed)
        self._chol_a = np.linalg.cholesky(self.prop.scale_a * self.prop.sigma_a)
        self.knots = config.phase_knots()
        self.spacings = np.diff(self.knots)
        self.bases = None if flat_likelihood else build_bases(config, grid)
        if self.flat:
            self._fixed_eval = self._random_eval = None
        else:
            self._fixed_eval = _fast_basis_eval(self.bases[0])
            self._random_eval = _fast_basis_eval(self.bases[1])
        prior_alpha = config.theta_gamma * self.spacings
        self._prior_am1 = prior_alpha - 1.0
        self._prior_lognorm = _dirichlet_lognorm(prior_alpha)
        self._refresh_proposal_cache()
        self.reset_state(init_state if init_state is not None else self._default_state())

    def _refresh_proposal_cache(self):
        prop_alpha = self.prop.alpha_prop * self.spacings
        self._prop_alpha = prop_alpha
        self._prop_am1 = prop_alpha - 1.0
        self._prop_lognorm = _dirichlet_lognorm(prop_alpha)

    # -- state management -------------------------------------------------

    def _default_state(self) -> ModelState:
        bf = self.config.b_fixed
        if self.flat:
            a0 = np.zeros(bf)
            s0 = sc0 = 1.0
        else:
            fixed = self.bases[0]
            fbar = self.data.mean(axis=0)
            a0 = fixed.eval_matrix.T @ (self.grid.weights * fbar)
            v = float(np.mean((self.data - fbar) ** 2))
            s0 = sc0 = max(v / 2.0, 1e-6)
        phases: list[PhaseFunction] = []
        for _ in range(self.n_obs):
            if self.config.prior_model == PM1:
                phases.append(ParametricPhase(0.0))
            else:
                phases.append(from_increments(PhaseIncrements(self.spacings.copy(), self.knots)))
        return ModelState(a=a0, sigma2=s0, sigmac2=sc0, phases=phases)

    def reset_state(self, state: ModelState):
        """Install a state; pm2 warps are projected onto the prior knots
        (the chain's pm2 state space is piecewise linear on those knots)."""
        phases = list(state.phases)
        if self.config.prior_model == PM2:
            self._pm2_vals = np.zeros((self.n_obs, self.knots.shape[0]))
            for i, gamma in enumerate(phases):
                vals = np.asarray(gamma.eval(self.knots), dtype=np.float64)
                vals[0], vals[-1] = 0.0, 1.0
                self._pm2_vals[i] = vals
                phases[i] = PiecewiseLinearPhase(self.knots, vals)
        self.state = ModelState(
            a=state.a.copy(),
            sigma2=state.sigma2,
            sigmac2=state.sigmac2,
            phases=phases,
        )
        n, T = self.n_obs, self.n_times
        bf, br = self.config.b_fixed, self.config.b_random
        self.phi = np.zeros((n, T, bf))
        self.phi_tilde = np.zeros((n, T, br))
        self.gdot = np.ones((n, T))
        if not self.flat:
            for i, gamma in enumerate(self.state.phases):
                self._install_design(i, gamma)
        self.loglik_i = self._loglik_vector(self.state.a, self.state.sigma2, self.state.sigmac2)

    def _install_design(self, i: int, gamma: PhaseFunction):
        design = warped_design(self.bases[0], self.bases[1], gamma, self.grid)
        self.phi[i] = design.phi
        self.phi_tilde[i] = design.phi_tilde
        self.gdot[i] = design.gamma_dot

    def _loglik_vector(self, a, sigma2, sigmac2) -> np.ndarray:
        if self.flat:
            return np.zeros(self.n_obs)
        return kernels.loglik_vector(
            self.data, self.phi, self.phi_tilde, self.gdot, a, sigma2, sigmac2
        )

    def _loglik_one(self, i, a, sigma2, sigmac2, phi, phi_tilde, gdot) -> float:
        if self.flat:
            return 0.0
        resid = self.data[i] - phi @ a
        return kernels.loglik_resid(resid, gdot, sigma2, sigmac2, phi_tilde)

    # -- parameter block updates ------------------------------------------

    def step_coefficients(self, rng: np.random.Generator) -> bool:
        """Random-walk update of the fixed-effect coefficient vector."""
        cur = self.state.a
        can = cur + self._chol_a @ rng.standard_normal(cur.shape[0])
        ll_can = self._loglik_vector(can, self.state.sigma2, self.state.sigmac2)
        log_ratio = (
            float(np.sum(ll_can) - np.sum(self.loglik_i))
            + mvn_iso_logpdf(can, self.config.prior_var_a)
            - mvn_iso_logpdf(cur, self.config.prior_var_a)
        )
        if _mh_accept(log_ratio, rng):
            self.state.a = can
            self.loglik_i = ll_can
            return True
        return False

    def step_variance(self, which: str, rng: np.random.Generator) -> bool:
        """Truncated-normal random-walk update of sigma2 or sigmac2."""
        cur = self.state.sigma2 if which == "sigma2" else self.state.sigmac2
        tau2 = self.prop.tau2_sigma if which == "sigma2" else self.prop.tau2_sigmac
        tau = math.sqrt(tau2)
        while True:  # rejection sampling; accepts with prob >= 1/2 for cur > 0
            can = cur + tau * rng.standard_normal()
            if can > 0.0:
                break
        if which == "sigma2":
            ll_can = self._loglik_vector(self.state.a, can, self.state.sigmac2)
        else:
            ll_can = self._loglik_vector(self.state.a, self.state.sigma2, can)
        log_ratio = (
            float(np.sum(ll_can) - np.sum(self.loglik_i))
            + invgamma_logpdf(can, self.config.ig_shape, self.config.ig_scale)
            - invgamma_logpdf(cur, self.config.ig_shape, self.config.ig_scale)
            + truncnorm_log_correction(cur, can, tau)
        )
        if _mh_accept(log_ratio, rng):
            if which == "sigma2":
                self.state.sigma2 = can
            else:
                self.state.sigmac2 = can
            self.loglik_i = ll_can
            return True
        return False

    def step_phase(self, i: int, rng: np.random.Generator) -> bool:
        if self.config.prior_model == PM1:
            return self._step_phase_window(i, rng)
        return self._step_phase_composition(i, rng)

    def _step_phase_window(self, i: int, rng: np.random.Generator) -> bool:
        """Uniform-window move of the one-parameter warp of observation i.

        Proposals outside (-1, 1) are rejected without consuming the
        acceptance uniform (the prior has no mass there)."""
        cur = self.state.phases[i].alpha
        can = rng.uniform(cur - self.prop.delta, cur + self.prop.delta)
        if uniform_alpha_logpdf(can) == -math.inf:
            return False
        if self.flat:
            warped_t = gdot = None
        else:
            t = self.grid.points
            warped_t = t + can * t * (t - 1.0)
            gdot = 1.0 + can * (2.0 * t - 1.0)
        return self._accept_phase(
            i, lambda: ParametricPhase(can), warped_t, gdot, extra_log_ratio=0.0, rng=rng
        )

    def _step_phase_composition(self, i: int, rng: np.random.Generator) -> bool:
        """Composition move gamma_cur o w with Dirichlet-increment w.

        The acceptance ratio is likelihood x Dirichlet prior ratio x
        proposal ratio, the latter combining the innovation densities of
        the forward/reverse moves with the two Jacobian determinants.
        Everything runs on raw knot-value arrays; the phase object is
        built only on acceptance."""
        knots = self.knots
        vals_cur = self._pm2_vals[i]
        w_deltas = rng.dirichlet(self._prop_alpha)
        inner = np.empty(knots.shape[0])
        inner[0] = 0.0
        np.cumsum(w_deltas, out=inner[1:])
        inner[-1] = 1.0
        vals_can = np.interp(inner, knots, vals_cur)
        vals_can[0], vals_can[-1] = 0.0, 1.0
        deltas_can = np.diff(vals_can)
        deltas_can[-1] = 1.0 - float(vals_can[-2])
        if np.min(deltas_can / self.spacings) < SLOPE_FLOOR:
            return False
        deltas_cur = np.diff(vals_cur)
        fwd = _transition_increments_values(knots, vals_cur, vals_can)
        rev = _transition_increments_values(knots, vals_can, vals_cur)
        log_ratio = (
            _dirichlet_logpdf_fast(deltas_can, self._prior_am1, self._prior_lognorm)
            - _dirichlet_logpdf_fast(deltas_cur, self._prior_am1, self._prior_lognorm)
            + _dirichlet_logpdf_fast(rev, self._prop_am1, self._prop_lognorm)
            + _jacobian_logdet_values(knots, vals_can, deltas_cur)
            - _dirichlet_logpdf_fast(fwd, self._prop_am1, self._prop_lognorm)
            - _jacobian_logdet_values(knots, vals_cur, deltas_can)
        )
        if not math.isfinite(log_ratio):
            return False
        if self.flat:
            warped_t = gdot = None
        else:
            t = self.grid.points
            warped_t = np.interp(t, knots, vals_can)
            gdot = kernels.piecewise_slopes(knots, vals_can, t)
        accepted = self._accept_phase(
            i,
            lambda: PiecewiseLinearPhase(knots, vals_can),
            warped_t,
            gdot,
            extra_log_ratio=log_ratio,
            rng=rng,
        )
        if accepted:
            self._pm2_vals[i] = vals_can
        return accepted

    def _accept_phase(self, i, make_phase, warped_t, gdot, extra_log_ratio, rng) -> bool:
        if self.flat:
            ll_can = 0.0
            phi = phit = None
        else:
            root = np.sqrt(gdot)[:, None]
            phi = self._fixed_eval(warped_t) * root
            phit = self._random_eval(warped_t) * root
            ll_can = self._loglik_one(
                i, self.state.a, self.state.sigma2, self.state.sigmac2, phi, phit, gdot
            )
        log_ratio = ll_can - self.loglik_i[i] + extra_log_ratio
        if _mh_accept(log_ratio, rng):
            self.state.phases[i] = make_phase()
            if not self.flat:
                self.phi[i] = phi
                self.phi_tilde[i] = phit
                self.gdot[i] = gdot
            self.loglik_i[i] = ll_can
            return True
        return False

    # -- adaptation --------------------------------------------------------

    def adapt_coefficients(self, a_window: np.ndarray, accept_rate: float):
        """Refresh the coefficient proposal from the recent draws."""
        bf = self.config.b_fixed
        cov = np.cov(a_window, rowvar=False, ddof=1) if a_window.shape[0] > 1 else np.zeros((bf, bf))
        cov = np.atleast_2d(cov)
        self.prop.sigma_a = (2.38**2 / bf) * cov + 1e-10 * np.eye(bf)
        if accept_rate > self.prop.target_accept_vector:
            self.prop.scale_a = min(self.prop.scale_a * 1.1, 1e3)
        else:
            self.prop.scale_a = max(self.prop.scale_a / 1.1, 1e-3)
        self._chol_a = np.linalg.cholesky(self.prop.scale_a * self.prop.sigma_a)

    def adapt_scalar(self, name: str, accept_rate: float):
        """Nudge a scalar proposal scale by 1.1 toward its target rate."""
        grow = accept_rate > self.prop.target_accept_scalar
        if name == "tau2_sigma":
            self.prop.tau2_sigma *= 1.1 if grow else 1 / 1.1
        elif name == "tau2_sigmac":
            self.prop.tau2_sigmac *= 1.1 if grow else 1 / 1.1
        elif name == "delta":
            self.prop.delta = min(self.prop.delta * (1.1 if grow else 1 / 1.1), 1.0)
        elif name == "alpha_prop":
            # larger concentration = tighter proposal, so the direction flips
            factor = 1 / 1.1 if grow else 1.1
            self.prop.alpha_prop = float(
                np.clip(self.prop.alpha_prop * factor, self.config.t_gamma, 1e6)
            )
            self._refresh_proposal_cache()
        else:
            raise ValueError(f"unknown scalar proposal {name!r}")


def run_chain(
    dataset,
    config: ModelConfig,
    prop: ProposalConfig | None,
    chain: ChainConfig,
    grid: TimeGrid | None = None,
    flat_likelihood: bool = False,
    init_state: ModelState | None = None,
    sample_a: bool = True,
    sample_sigma2: bool = True,
    sample_sigmac2: bool = True,
    sample_phases: bool = True,
) -> PosteriorDraws:
    """Run one adaptive MH chain and return the kept draws.

    Follows a fixed sweep order (coefficients, error variance, random
    effect variance, then each observation's warp), adapting proposals
    every ``adapt_interval`` iterations during burn-in only. Fully
    deterministic given the seed. The ``sample_*`` flags freeze blocks
    at their initial values, which is useful for conditional checks.
    """
    prop = replace(prop) if prop is not None else ProposalConfig()
    if prop.sigma_a is not None:
        prop.sigma_a = np.array(prop.sigma_a, dtype=np.float64)
    sampler = MetropolisSampler(
        dataset,
        config,
        prop,
        grid=grid,
        flat_likelihood=flat_likelihood,
        init_state=init_state,
    )
    rng = np.random.default_rng(chain.seed)
    n, bf = sampler.n_obs, config.b_fixed
    n_t = prop.adapt_interval
    kept = chain.n_kept
    out_a = np.zeros((kept, bf))
    out_s2 = np.zeros(kept)
    out_sc2 = np.zeros(kept)
    if config.prior_model == PM1:
        out_phase = np.zeros((kept, n))
    else:
        out_phase = np.zeros((kept, n, config.t_gamma - 1))

    a_window = np.tile(sampler.state.a, (n_t, 1))
    window_counts = {"a": 0, "sigma2": 0, "sigmac2": 0, "phase": 0}
    totals = {"a": [0, 0], "sigma2": [0, 0], "sigmac2": [0, 0], "phase": [0, 0]}
    k = 0
    try:
        for j in range(1, chain.n_total + 1):
            adapting = j % n_t == 0 and j < chain.n_burn
            if adapting and sample_a:
                sampler.adapt_coefficients(a_window, window_counts["a"] / n_t)
                window_counts["a"] = 0
            if sample_a:
                acc = sampler.step_coefficients(rng)
                window_counts["a"] += acc
                totals["a"][0] += acc
                totals["a"][1] += 1
            a_window[(j - 1) % n_t] = sampler.state.a

            if adapting and sample_sigma2:
                sampler.adapt_scalar("tau2_sigma", window_counts["sigma2"] / n_t)
                window_counts["sigma2"] = 0
            if sample_sigma2:
                acc = sampler.step_variance("sigma2", rng)
                window_counts["sigma2"] += acc
                totals["sigma2"][0] += acc
                totals["sigma2"][1] += 1

            if adapting and sample_sigmac2:
                sampler.adapt_scalar("tau2_sigmac", window_counts["sigmac2"] / n_t)
                window_counts["sigmac2"] = 0
            if sample_sigmac2:
                acc = sampler.step_variance("sigmac2", rng)
                window_counts["sigmac2"] += acc
                totals["sigmac2"][0] += acc
                totals["sigmac2"][1] += 1

            if sample_phases:
                if adapting:
                    name = "delta" if config.prior_model == PM1 else "alpha_prop"
                    sampler.adapt_scalar(name, window_counts["phase"] / (n_t * n))
                    window_counts["phase"] = 0
                for i in range(n):
                    acc = sampler.step_phase(i, rng)
                    window_counts["phase"] += acc
                    totals["phase"][0] += acc
                    totals["phase"][1] += 1

            if j > chain.n_burn and (j - chain.n_burn) % chain.thin == 0:
                out_a[k] = sampler.state.a
                out_s2[k] = sampler.state.sigma2
                out_sc2[k] = sampler.state.sigmac2
                if config.prior_model == PM1:
                    for i in range(n):
                        out_phase[k, i] = sampler.state.phases[i].alpha
                else:
                    out_phase[k] = np.diff(sampler._pm2_vals, axis=1)
                k += 1
    except NumericalError as err:
        raise NumericalError(f"iteration {j}: {err}") from err

    rates = {
        name: (cnt[0] / cnt[1] if cnt[1] else 0.0) for name, cnt in totals.items()
    }
    return PosteriorDraws(
        a=out_a[:k],
        sigma2=out_s2[:k],
        sigmac2=out_sc2[:k],
        phase_params=out_phase[:k],
        prior_model=config.prior_model,
        phase_knots=None if config.prior_model == PM1 else sampler.knots,
        acceptance=rates,
        accept_counts={name: (cnt[0], cnt[1]) for name, cnt in totals.items()},
        proposal=sampler.prop,
        seed=chain.seed,
    )
