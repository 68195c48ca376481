import math

import numpy as np
import pytest
import scipy.stats

from bayesfmm.grid import TimeGrid
from bayesfmm.model import (
    ModelConfig,
    ModelState,
    build_bases,
    dirichlet_logpdf,
    invgamma_logpdf,
    log_prior,
    marginal_loglik_one,
    mvn_iso_logpdf,
    total_loglik,
    uniform_alpha_logpdf,
    warped_design,
)
from bayesfmm.phase import ParametricPhase, PhaseIncrements, from_increments, identity_phase


@pytest.fixture(scope="module")
def small_setup():
    grid = TimeGrid.uniform(50)
    config = ModelConfig(b_fixed=4, b_random=4)
    fixed, random = build_bases(config, grid)
    return grid, config, fixed, random


def test_warped_design_identity_exact(small_setup):
    grid, _, fixed, random = small_setup
    design = warped_design(fixed, random, identity_phase(), grid)
    assert np.array_equal(design.phi, fixed.eval_matrix)
    assert np.array_equal(design.phi_tilde, random.eval_matrix)
    assert np.all(design.gamma_dot == 1.0)


def test_warped_design_column_norms(small_setup):
    # the norm-preserving action keeps unit columns unit, up to quadrature
    grid101 = TimeGrid.uniform(101)
    config = ModelConfig(b_fixed=4, b_random=4)
    fixed, random = build_bases(config, grid101)
    rng = np.random.default_rng(0)
    for _ in range(5):
        design = warped_design(fixed, random, ParametricPhase(rng.uniform(-0.9, 0.9)), grid101)
        norms = np.sqrt(grid101.weights @ design.phi**2)
        assert np.max(np.abs(norms - 1.0)) < 5e-2


def test_warped_design_row_scaling(small_setup):
    grid, _, fixed, random = small_setup
    design = warped_design(fixed, random, ParametricPhase(0.5), grid)
    # gamma(0)=0 and gamma_dot(0)=0.5, so the first row is scaled by sqrt(.5)
    assert np.allclose(design.phi[0], fixed.eval_matrix[0] * np.sqrt(0.5))


def test_loglik_standard_normal_origin(small_setup):
    grid, _, fixed, random = small_setup
    design = warped_design(fixed, random, identity_phase(), grid)
    ll = marginal_loglik_one(np.zeros(50), np.zeros(4), 1.0, 0.0, design, grid)
    assert ll == pytest.approx(-25.0 * math.log(2.0 * math.pi), abs=1e-12)


def test_loglik_diagonal_matches_normal_sum(small_setup):
    grid, _, fixed, random = small_setup
    rng = np.random.default_rng(1)
    f = rng.normal(size=50)
    a = rng.normal(size=4)
    design = warped_design(fixed, random, identity_phase(), grid)
    ll = marginal_loglik_one(f, a, 0.3, 0.0, design, grid)
    resid = f - design.phi @ a
    expected = scipy.stats.norm(0, np.sqrt(0.3)).logpdf(resid).sum()
    assert ll == pytest.approx(expected, abs=1e-10)


def test_loglik_dense_matches_woodbury_small():
    grid = TimeGrid.uniform(10)
    config = ModelConfig(b_fixed=3, b_random=2, random_basis="fourier")
    fixed, random = build_bases(config, grid)
    rng = np.random.default_rng(2)
    design = warped_design(fixed, random, ParametricPhase(0.3), grid)
    f = rng.normal(size=10)
    a = rng.normal(size=3)
    lw = marginal_loglik_one(f, a, 0.5, 0.7, design, grid, method="woodbury")
    ld = marginal_loglik_one(f, a, 0.5, 0.7, design, grid, method="dense")
    assert lw == pytest.approx(ld, abs=1e-8)


def test_loglik_matches_scipy_dense_oracle():
    grid = TimeGrid.uniform(10)
    config = ModelConfig(b_fixed=3, b_random=2, random_basis="fourier")
    fixed, random = build_bases(config, grid)
    rng = np.random.default_rng(3)
    design = warped_design(fixed, random, ParametricPhase(-0.4), grid)
    f = rng.normal(size=10)
    a = rng.normal(size=3)
    cov = 0.5 * np.diag(design.gamma_dot) + 0.7 * design.phi_tilde @ design.phi_tilde.T
    oracle = scipy.stats.multivariate_normal(mean=design.phi @ a, cov=cov).logpdf(f)
    assert marginal_loglik_one(f, a, 0.5, 0.7, design, grid) == pytest.approx(oracle, abs=1e-8)


def test_loglik_path_invariance_random_instances():
    rng = np.random.default_rng(4)
    for T in (12, 30, 50):
        grid = TimeGrid.uniform(T)
        config = ModelConfig(b_fixed=3, b_random=4)
        fixed, random = build_bases(config, grid)
        design = warped_design(fixed, random, ParametricPhase(rng.uniform(-0.8, 0.8)), grid)
        f = rng.normal(size=T)
        a = rng.normal(size=3)
        s2, sc2 = rng.uniform(0.05, 2.0, 2)
        lw = marginal_loglik_one(f, a, s2, sc2, design, grid, method="woodbury")
        ld = marginal_loglik_one(f, a, s2, sc2, design, grid, method="dense")
        assert lw == pytest.approx(ld, abs=1e-8)


def test_total_loglik_single_equals_one(small_setup):
    grid, config, fixed, random = small_setup
    rng = np.random.default_rng(5)
    f = rng.normal(size=(1, 50))
    state = ModelState(a=rng.normal(size=4), sigma2=0.2, sigmac2=0.1, phases=[ParametricPhase(0.2)])
    design = warped_design(fixed, random, state.phases[0], grid)
    one = marginal_loglik_one(f[0], state.a, 0.2, 0.1, design, grid)
    assert total_loglik(f, state, (fixed, random), grid) == pytest.approx(one)


def test_total_loglik_permutation_and_duplication(small_setup):
    grid, config, fixed, random = small_setup
    rng = np.random.default_rng(6)
    f = rng.normal(size=(3, 50))
    phases = [ParametricPhase(a) for a in (-0.3, 0.0, 0.4)]
    state = ModelState(a=rng.normal(size=4), sigma2=0.2, sigmac2=0.1, phases=phases)
    base = total_loglik(f, state, (fixed, random), grid)
    perm = [2, 0, 1]
    state_p = ModelState(a=state.a, sigma2=0.2, sigmac2=0.1, phases=[phases[i] for i in perm])
    assert total_loglik(f[perm], state_p, (fixed, random), grid) == pytest.approx(base)
    state_d = ModelState(a=state.a, sigma2=0.2, sigmac2=0.1, phases=[phases[0], phases[0]])
    doubled = total_loglik(np.stack([f[0], f[0]]), state_d, (fixed, random), grid)
    single = total_loglik(f[:1], ModelState(a=state.a, sigma2=0.2, sigmac2=0.1, phases=phases[:1]), (fixed, random), grid)
    assert doubled == pytest.approx(2.0 * single)


def test_invgamma_logpdf_matches_scipy():
    oracle = scipy.stats.invgamma(0.01, scale=0.01)
    for x in (0.05, 1.0, 37.0):
        assert invgamma_logpdf(x, 0.01, 0.01) == pytest.approx(oracle.logpdf(x), abs=1e-10)
    assert invgamma_logpdf(0.0, 0.01, 0.01) == -math.inf
    assert invgamma_logpdf(-1.0, 0.01, 0.01) == -math.inf


def test_dirichlet_logpdf_matches_scipy():
    alpha = np.array([7.5, 7.5, 7.5, 7.5])
    x = np.array([0.3, 0.25, 0.25, 0.2])
    oracle = scipy.stats.dirichlet(alpha).logpdf(x)
    assert dirichlet_logpdf(x, alpha) == pytest.approx(oracle, abs=1e-10)
    assert dirichlet_logpdf(np.array([0.0, 0.5, 0.5, 0.0]), alpha) == -math.inf


def test_uniform_alpha_support():
    assert uniform_alpha_logpdf(0.0) == 0.0
    assert uniform_alpha_logpdf(0.999) == 0.0
    assert uniform_alpha_logpdf(1.5) == -math.inf
    assert uniform_alpha_logpdf(-1.0) == -math.inf


def test_log_prior_closed_form_pm1():
    config = ModelConfig(b_fixed=3, b_random=4, prior_model="pm1")
    state = ModelState(
        a=np.zeros(3), sigma2=1.0, sigmac2=1.0, phases=[identity_phase(), identity_phase()]
    )
    expected = (
        mvn_iso_logpdf(np.zeros(3), 10000.0)
        + 2.0 * invgamma_logpdf(1.0, 0.01, 0.01)
    )
    assert log_prior(state, config) == pytest.approx(expected, abs=1e-12)
    # cross-check the pieces against scipy
    scipy_val = (
        scipy.stats.multivariate_normal(np.zeros(3), 10000.0 * np.eye(3)).logpdf(np.zeros(3))
        + 2.0 * scipy.stats.invgamma(0.01, scale=0.01).logpdf(1.0)
    )
    assert log_prior(state, config) == pytest.approx(scipy_val, abs=1e-10)


def test_log_prior_pm2_mode_at_spacings():
    config = ModelConfig(b_fixed=2, b_random=4, prior_model="pm2", t_gamma=5, theta_gamma=30.0)
    knots = config.phase_knots()
    spac = np.diff(knots)
    center = from_increments(PhaseIncrements(spac, knots))
    base = ModelState(a=np.zeros(2), sigma2=1.0, sigmac2=1.0, phases=[center])
    lp0 = log_prior(base, config)
    for eps in (0.01, 0.05):
        for j in (0, 2):
            d = spac.copy()
            d[j] += eps
            d[(j + 1) % 4] -= eps
            state = ModelState(
                a=np.zeros(2), sigma2=1.0, sigmac2=1.0,
                phases=[from_increments(PhaseIncrements(d, knots))],
            )
            assert log_prior(state, config) < lp0


def test_log_prior_finite_iff_support():
    config = ModelConfig(b_fixed=2, b_random=4)
    good = ModelState(a=np.zeros(2), sigma2=0.5, sigmac2=0.5, phases=[identity_phase()])
    assert math.isfinite(log_prior(good, config))
    bad = ModelState(a=np.zeros(2), sigma2=0.5, sigmac2=0.0, phases=[identity_phase()])
    assert log_prior(bad, config) == -math.inf


def test_total_loglik_sigma2_unimodal_by_grid(small_setup):
    # likelihood falls off when sigma2 is scaled far from the residual
    # scale (grid check, no analytic claim)
    grid, config, fixed, random = small_setup
    rng = np.random.default_rng(7)
    a_true = rng.normal(size=4)
    f = np.stack([fixed.eval_matrix @ a_true + rng.normal(0, np.sqrt(0.2), 50) for _ in range(4)])
    phases = [identity_phase()] * 4
    values = []
    scales = [0.002, 0.02, 0.2, 2.0, 20.0]
    for s2 in scales:
        state = ModelState(a=a_true, sigma2=s2, sigmac2=1e-8, phases=phases)
        values.append(total_loglik(f, state, (fixed, random), grid))
    best = int(np.argmax(values))
    assert scales[best] == 0.2
    assert values[0] < values[best] and values[-1] < values[best]


def test_model_config_validation():
    with pytest.raises(ValueError):
        ModelConfig(b_fixed=0)
    with pytest.raises(ValueError):
        ModelConfig(prior_model="pm3")
    with pytest.raises(ValueError):
        ModelConfig(theta_gamma=-1.0)
