import numpy as np
import pytest

from bayesfmm.grid import TimeGrid
from bayesfmm.model import ModelConfig, build_bases, warped_design
from bayesfmm.simulate import (
    SimSpec,
    fixed_effect_library,
    generate_from_model,
    generate_value_warped,
)


def test_noiseless_identity_case():
    # zero variances: every observation equals the basis expansion
    # (phases are random, so force the degenerate check through variances
    # and a config whose warps stay near identity)
    config = ModelConfig(b_fixed=4, b_random=4, prior_model="pm2", t_gamma=5, theta_gamma=1e9)
    spec = SimSpec(n_obs=3, n_times=40, generator="pm2", sigma2_true=0.0, sigmac2_true=0.0, seed=1)
    data, truth = generate_from_model(spec, config)
    grid = TimeGrid.uniform(40)
    fixed, random = build_bases(config, grid)
    for i in range(3):
        design = warped_design(fixed, random, truth.phases[i], grid)
        assert np.allclose(data[i], design.phi @ truth.a, atol=1e-12)


def test_noiseless_pm1_exact_phi_a():
    config = ModelConfig(b_fixed=4, b_random=4, prior_model="pm1")
    spec = SimSpec(n_obs=2, n_times=30, generator="pm1", sigma2_true=0.0, sigmac2_true=0.0, seed=2)
    data, truth = generate_from_model(spec, config)
    grid = TimeGrid.uniform(30)
    fixed, random = build_bases(config, grid)
    for i in range(2):
        design = warped_design(fixed, random, truth.phases[i], grid)
        assert np.allclose(data[i], design.phi @ truth.a, atol=1e-12)


def test_error_variance_scales_with_gamma_dot():
    # Monte Carlo check of the sqrt(gamma_dot) error scaling
    config = ModelConfig(b_fixed=3, b_random=4, prior_model="pm1")
    grid = TimeGrid.uniform(25)
    fixed, random = build_bases(config, grid)
    reps = 4000
    resid = np.zeros((reps, 25))
    gdots = np.zeros((reps, 25))
    for r in range(reps):
        spec = SimSpec(n_obs=1, n_times=25, generator="pm1", sigma2_true=0.3, sigmac2_true=0.0, seed=r)
        data, truth = generate_from_model(spec, config)
        design = warped_design(fixed, random, truth.phases[0], grid)
        resid[r] = data[0] - design.phi @ truth.a
        gdots[r] = design.gamma_dot
    ratio = resid.var(axis=0) / (0.3 * gdots.mean(axis=0))
    # residual variance tracks sigma2 * gamma_dot pointwise
    assert np.all(np.abs(ratio - 1.0) < 0.25)


def test_seed_reproducibility():
    config = ModelConfig(b_fixed=4, b_random=4)
    spec = SimSpec(n_obs=4, n_times=20, generator="pm1", seed=9)
    d1, t1 = generate_from_model(spec, config)
    d2, t2 = generate_from_model(spec, config)
    assert np.array_equal(d1, d2)
    assert np.array_equal(t1.a, t2.a)
    assert all(p1.alpha == p2.alpha for p1, p2 in zip(t1.phases, t2.phases))


def test_fixed_effect_library_values():
    grid = TimeGrid.uniform(5)
    mu3 = np.asarray(fixed_effect_library(3, grid))
    assert mu3[0] == pytest.approx(0.0, abs=1e-15)  # cos(pi/2)
    mu1 = np.asarray(fixed_effect_library(1, grid))
    assert mu1[-1] == pytest.approx(3.0 * np.pi / 4.0, abs=1e-12)
    g = TimeGrid.uniform(9)
    mu2 = np.asarray(fixed_effect_library(2, g))
    # at t=.25 the first bump peaks and the second contributes exp(-12.5)
    assert mu2[2] == pytest.approx(1.0 + np.exp(-12.5), abs=1e-9)


def test_fixed_effect_library_bad_id():
    with pytest.raises(ValueError):
        fixed_effect_library(4, TimeGrid.uniform(5))


def test_value_warped_zero_noise_identity():
    spec = SimSpec(
        n_obs=2, n_times=30, generator="value_warped",
        sigma2_true=0.0, sigmac2_true=0.0, mu_id=3, seed=3,
    )
    grid = TimeGrid.uniform(30)
    data, mu = generate_value_warped(spec, grid)
    # v_i = 0 and eps = 0, so observations are value-warped mu only;
    # a warp cannot change the range of values
    assert np.all(data <= np.max(np.asarray(mu)) + 1e-12)
    assert np.all(data >= np.min(np.asarray(mu)) - 1e-12)
    assert np.allclose(data[:, 0], np.asarray(mu)[0])
    assert np.allclose(data[:, -1], np.asarray(mu)[-1])


def test_value_warped_noise_scale():
    reps = 300
    grid = TimeGrid.uniform(20)
    diffs = []
    for r in range(reps):
        s_noisy = SimSpec(n_obs=1, n_times=20, generator="value_warped",
                          sigma2_true=1e-4, sigmac2_true=0.0, mu_id=1, seed=r)
        s_clean = SimSpec(n_obs=1, n_times=20, generator="value_warped",
                          sigma2_true=0.0, sigmac2_true=0.0, mu_id=1, seed=r)
        noisy, _ = generate_value_warped(s_noisy, grid)
        clean, _ = generate_value_warped(s_clean, grid)
        diffs.append(noisy[0] - clean[0])
    sd = np.std(np.concatenate(diffs))
    assert sd == pytest.approx(0.01, rel=0.1)


def test_value_warped_seed_reproducibility():
    spec = SimSpec(n_obs=3, n_times=15, generator="value_warped", seed=5)
    d1, _ = generate_value_warped(spec)
    d2, _ = generate_value_warped(spec)
    assert np.array_equal(d1, d2)


def test_generator_mismatch_guards():
    config = ModelConfig()
    with pytest.raises(ValueError):
        generate_from_model(SimSpec(n_obs=1, n_times=10, generator="value_warped"), config)
    with pytest.raises(ValueError):
        generate_value_warped(SimSpec(n_obs=1, n_times=10, generator="pm1"))
    with pytest.raises(ValueError):
        SimSpec(n_obs=0, n_times=10)
    with pytest.raises(ValueError):
        SimSpec(n_obs=1, n_times=10, generator="nope")
