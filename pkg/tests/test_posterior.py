import numpy as np
import pytest

from bayesfmm.basis import make_basis
from bayesfmm.grid import TimeGrid
from bayesfmm.mcmc import PosteriorDraws, ProposalConfig
from bayesfmm.phase import ParametricPhase, act_norm_preserving, invert
from bayesfmm.posterior import (
    aligned_delta_mu,
    center_mu,
    delta_mu,
    mean_phase_of_draws,
    pointwise_summary,
    rotated_fit,
)


def _draws(a, phase_params, prior_model="pm1", knots=None):
    a = np.atleast_2d(a)
    return PosteriorDraws(
        a=a,
        sigma2=np.ones(a.shape[0]),
        sigmac2=np.ones(a.shape[0]),
        phase_params=np.asarray(phase_params, dtype=float),
        prior_model=prior_model,
        phase_knots=knots,
        acceptance={},
        accept_counts={},
        proposal=ProposalConfig(),
        seed=0,
    )


@pytest.fixture(scope="module")
def setup():
    grid = TimeGrid.uniform(60)
    basis = make_basis("fourier", 4, grid)
    return grid, basis


def test_center_mu_identity_phases(setup):
    grid, basis = setup
    rng = np.random.default_rng(0)
    a = rng.normal(size=(5, 4))
    draws = _draws(a, np.zeros((5, 3)))
    centered = center_mu(draws, basis, grid)
    assert np.allclose(centered.mu, a @ basis.eval_matrix.T, atol=1e-12)
    assert np.allclose(centered.gamma_bar.values, grid.points)


def test_center_mu_symmetric_alphas_cancel(setup):
    grid, basis = setup
    a = np.tile(np.array([1.0, -0.5, 0.2, 0.0]), (4, 1))
    phase = np.array([[0.6, -0.6], [0.3, -0.3], [-0.2, 0.2], [0.0, 0.0]])
    draws = _draws(a, phase)
    centered = center_mu(draws, basis, grid)
    assert np.max(np.abs(centered.gamma_bar.values - grid.points)) < 1e-12


def test_center_mu_single_draw_single_obs(setup):
    grid, basis = setup
    draws = _draws(np.array([[1.0, 0.0, 0.0, 0.0]]), np.array([[0.4]]))
    gamma_bar = mean_phase_of_draws(draws, grid)
    assert np.allclose(gamma_bar.values, ParametricPhase(0.4).eval(grid.points))


def test_center_mu_pm2_mean_increments(setup):
    grid, basis = setup
    knots = np.linspace(0, 1, 5)
    inc = np.array(
        [
            [[0.4, 0.2, 0.2, 0.2]],
            [[0.1, 0.3, 0.3, 0.3]],
        ]
    )
    draws = _draws(np.zeros((2, 4)), inc, prior_model="pm2", knots=knots)
    gamma_bar = mean_phase_of_draws(draws, grid)
    assert gamma_bar.eval(0.25) == pytest.approx(0.25)  # mean first increment
    assert gamma_bar.eval(0.5) == pytest.approx(0.5)


def test_pointwise_summary_identical_draws(setup):
    grid, basis = setup
    draws = _draws(np.tile([0.5, 1.0, 0.0, 0.0], (3, 1)), np.zeros((3, 1)))
    centered = center_mu(draws, basis, grid)
    mean, lower, upper = pointwise_summary(centered)
    assert np.allclose(np.asarray(lower), np.asarray(mean))
    assert np.allclose(np.asarray(upper), np.asarray(mean))


def test_pointwise_summary_two_values():
    grid = TimeGrid.uniform(10)
    from bayesfmm.posterior import CenteredMuDraws
    from bayesfmm.phase import PiecewiseLinearPhase

    mu = np.vstack([np.zeros((5, 10)), np.ones((5, 10))])
    centered = CenteredMuDraws(
        mu=mu, gamma_bar=PiecewiseLinearPhase(grid.points, grid.points), grid=grid
    )
    mean, lower, upper = pointwise_summary(centered)
    assert np.allclose(np.asarray(mean), 0.5)


def test_pointwise_summary_normal_band():
    grid = TimeGrid.uniform(5)
    from bayesfmm.posterior import CenteredMuDraws
    from bayesfmm.phase import PiecewiseLinearPhase

    rng = np.random.default_rng(1)
    mu = rng.standard_normal((40000, 5))
    centered = CenteredMuDraws(
        mu=mu, gamma_bar=PiecewiseLinearPhase(grid.points, grid.points), grid=grid
    )
    _, lower, upper = pointwise_summary(centered)
    assert np.max(np.abs(np.asarray(lower) + 1.96)) < 0.05
    assert np.max(np.abs(np.asarray(upper) - 1.96)) < 0.05


def test_pointwise_summary_needs_two_draws(setup):
    grid, basis = setup
    draws = _draws(np.array([[1.0, 0.0, 0.0, 0.0]]), np.zeros((1, 1)))
    with pytest.raises(ValueError):
        pointwise_summary(center_mu(draws, basis, grid))


def test_band_ordering_many_draws(setup):
    grid, basis = setup
    rng = np.random.default_rng(2)
    draws = _draws(rng.normal(size=(500, 4)), rng.uniform(-0.5, 0.5, size=(500, 2)))
    centered = center_mu(draws, basis, grid)
    mean, lower, upper = pointwise_summary(centered)
    assert np.all(np.asarray(lower) <= np.asarray(upper))
    assert np.all(np.asarray(lower) <= np.asarray(mean))
    assert np.all(np.asarray(mean) <= np.asarray(upper))


def test_delta_mu_zero_for_equal():
    grid = TimeGrid.uniform(30)
    f = np.sin(grid.points)
    assert delta_mu(f, f, grid) == 0.0


def test_delta_mu_constant_offset():
    # the spacings telescope to t_T - t_1 = 1, so a constant offset c
    # contributes exactly c^2 on any grid
    grid = TimeGrid.uniform(20)
    c = 0.7
    assert delta_mu(np.zeros(20), np.full(20, c), grid) == pytest.approx(c * c, abs=1e-12)
    ragged = TimeGrid.from_points([0.0, 0.1, 0.35, 0.8, 1.0])
    assert delta_mu(np.zeros(5), np.full(5, c), ragged) == pytest.approx(c * c, abs=1e-12)


def test_delta_mu_linear_residual():
    grid = TimeGrid.uniform(101)
    est = grid.points.copy()
    truth = np.zeros(101)
    assert delta_mu(est, truth, grid) == pytest.approx(1.0 / 3.0, abs=0.02)


def test_delta_mu_symmetry():
    grid = TimeGrid.uniform(25)
    rng = np.random.default_rng(3)
    f, g = rng.normal(size=(2, 25))
    assert delta_mu(f, g, grid) == pytest.approx(delta_mu(g, f, grid))


def test_aligned_delta_mu_removes_rotation():
    grid = TimeGrid.uniform(200)
    mu = np.sin(2 * np.pi * grid.points) + 0.5 * np.cos(4 * np.pi * grid.points)
    rotated = np.asarray(act_norm_preserving(mu, ParametricPhase(0.3), grid))
    raw = delta_mu(rotated, mu, grid)
    best, alpha = aligned_delta_mu(rotated, mu, grid)
    assert best < 0.05 * raw
    assert alpha == pytest.approx(-0.3, abs=0.05)


def test_rotated_fit_identity(setup):
    grid, basis = setup
    rng = np.random.default_rng(4)
    a = rng.normal(size=(6, 4))
    draws = _draws(a, np.zeros((6, 2)))
    fits = rotated_fit(draws, 1, basis, grid)
    assert len(fits) == 6
    for k in range(6):
        assert np.allclose(np.asarray(fits[k]), basis.eval_matrix @ a[k])


def test_rotated_fit_norm_isometry(setup):
    grid, basis = setup
    from bayesfmm.grid import l2_norm

    rng = np.random.default_rng(5)
    a = rng.normal(size=(10, 4))
    draws = _draws(a, rng.uniform(-0.7, 0.7, size=(10, 3)))
    fits = rotated_fit(draws, 2, basis, grid)
    for k in range(10):
        mu_k = basis.eval_matrix @ a[k]
        assert abs(l2_norm(fits[k], grid) - l2_norm(mu_k, grid)) < 5e-2


def test_rotated_fit_inverse_roundtrip(setup):
    grid, basis = setup
    a = np.array([[0.8, -0.4, 0.3, 0.1]])
    draws = _draws(a, np.array([[0.5]]))
    fit = rotated_fit(draws, 0, basis, grid)[0]
    back = act_norm_preserving(fit, invert(ParametricPhase(0.5), 2001), grid)
    mu0 = basis.eval_matrix @ a[0]
    assert np.max(np.abs(np.asarray(back) - mu0)) < 1e-2


def test_rotated_fit_index_error(setup):
    grid, basis = setup
    draws = _draws(np.zeros((2, 4)), np.zeros((2, 2)))
    with pytest.raises(IndexError):
        rotated_fit(draws, 5, basis, grid)
