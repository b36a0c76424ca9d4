#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Tests for `lattice_fbm.mild_solver`."""
import numpy as np
import pytest

from ..lattice_fbm import mild_solver as ms
from ..lattice_fbm.fbm_noise import NoiseConfig, NoisePath, OutOfHorizonError, sample_noise
from ..lattice_fbm.holder_spaces import default_exponents
from ..lattice_fbm.lattice_ops import (LatticeModel, NonlinearityFamily, default_initial_condition, default_sigma,
                                       semigroup_apply)

WINDOW = 6
STEP = 2.0 ** -7


def _noise(hurst=0.75, scale=0.3, seed=8, horizon=1.0):
    return sample_noise(NoiseConfig(hurst=hurst, sigma=default_sigma(WINDOW, scale), horizon=horizon,
                                    grid_step=STEP, seed=seed))


def _config(**kwargs):
    return ms.SolverConfig(holder=default_exponents(kwargs.pop('hurst', 0.75)), grid_step=STEP, **kwargs)


@pytest.fixture(scope='module')
def model():
    return LatticeModel(nu=1.0, lam=1.0, window=WINDOW)


@pytest.fixture(scope='module')
def x():
    return default_initial_condition(WINDOW, 0.5, 2.0)


def test_solver_config():
    config = _config()
    assert config.n_steps == 128
    assert config.times[-1] == pytest.approx(1.0)
    assert config.with_horizon(0.5).n_steps == 64
    with pytest.raises(ValueError, match='divide T'):
        _config(T=1.001)
    with pytest.raises(ValueError, match='rho_max'):
        _config(rho=10.0, rho_max=1.0)
    with pytest.raises(ValueError, match='backend'):
        _config(backend='milstein')


def test_picard_is_euler(model, x):
    noise = _noise()
    config = _config()
    solution = ms.picard_solve(x, noise, model, config)
    assert solution.within_ball
    assert solution.residual < config.picard_tol
    assert solution.ball_radius_used == pytest.approx(ms.ball_radius(model, config, x))
    euler = ms.euler_solve(x, noise, model, config)
    np.testing.assert_allclose(solution.path.values, euler.values, atol=1e-6)
    np.testing.assert_allclose(solution.path.values[0], x)
    fixed = ms.picard_map(x, solution.path, noise, model, config)
    np.testing.assert_allclose(fixed.values, solution.path.values, atol=1e-6)


def test_zero_is_a_fixed_point(model):
    solution = ms.picard_solve(np.zeros(WINDOW), _noise(), model, _config())
    assert solution.iterations == 1
    np.testing.assert_array_equal(solution.path.values, 0.0)


def test_without_nonlinearity_solution_is_semigroup(x):
    linear = LatticeModel(nu=1.0, lam=1.0, window=WINDOW, family=NonlinearityFamily.stability(0.0, 0.0))
    config = _config()
    solution = ms.picard_solve(x, _noise(), linear, config)
    expected = np.array([semigroup_apply(linear, t, x) for t in config.times])
    np.testing.assert_allclose(solution.path.values, expected, atol=1e-12)


def test_fractional_cell_weights_are_trapezoid():
    left, right = ms._cell_weights(0.45, 8)
    assert left == pytest.approx(0.5, rel=1e-10)
    assert right == pytest.approx(0.5, rel=1e-10)


def test_fractional_backend_close_to_young(model, x):
    noise = _noise()
    young = ms.picard_solve(x, noise, model, _config())
    fractional = ms.picard_solve(x, noise, model, _config(backend='fractional'))
    assert fractional.backend == 'fractional'
    assert np.max(np.abs(young.path.values - fractional.path.values)) < 1e-2


def test_picard_failures(model, x):
    noise = _noise()
    with pytest.raises(ms.ConvergenceError, match='within 1 iterations') as err:
        ms.picard_solve(x, noise, model, _config(picard_max_iter=1))
    assert err.value.factors == ()
    with pytest.raises(ValueError, match='initial value'):
        ms.picard_solve(x[:-1], noise, model, _config())
    with pytest.raises(ValueError, match='solver step'):
        ms.picard_solve(x, noise.subsample(2), model, _config())
    with pytest.raises(ValueError, match='nodes'):
        ms.picard_solve(np.zeros(WINDOW + 1), noise, LatticeModel(nu=1.0, lam=1.0, window=WINDOW + 1), _config())
    with pytest.raises(OutOfHorizonError):
        ms.picard_solve(x, noise, model, _config(T=2.0))


def test_picard_map_rejects_foreign_grid(model, x):
    noise = _noise()
    solution = ms.picard_solve(x, noise, model, _config())
    with pytest.raises(ValueError, match='solver grid'):
        ms.picard_map(x, solution.path.restrict(0.0, 0.5), noise, model, _config())
    with pytest.raises(ValueError, match='backend'):
        ms.picard_map(x, solution.path, noise, model, _config(), backend='sums')


def test_euler_refinement(model, x):
    noise = _noise(hurst=0.9, scale=0.1, seed=2)
    coarse, fine = ms.euler_refinement(x, noise, model, _config(hurst=0.9))
    assert coarse / fine >= 1.4


@pytest.mark.parametrize('seed', [0, 1, 2])
def test_contraction_after_rho_tuning(seed):
    window, step = 64, 2.0 ** -10
    model = LatticeModel(nu=1.0, lam=1.0, window=window)
    noise = sample_noise(NoiseConfig(hurst=0.75, sigma=default_sigma(window, 0.3), horizon=1.0, grid_step=step,
                                     seed=seed))
    config = ms.SolverConfig(holder=default_exponents(0.75), grid_step=step)
    solution = ms.picard_solve(default_initial_condition(window, 0.5, 2.0), noise, model, config)
    assert solution.residual < config.picard_tol
    assert max(solution.contraction_factors[-3:]) < 0.5


def test_cocycle(model, x):
    noise = _noise()
    config = _config()
    report = ms.verify_cocycle(x, noise, model, config, 0.5, 0.5)
    assert report.passed
    assert report.measurements['relative_discrepancy'] < 1e-6
    with pytest.raises(ValueError, match='multiples'):
        ms.verify_cocycle(x, noise, model, config, 0.3, 0.5)
    with pytest.raises(OutOfHorizonError):
        ms.verify_cocycle(x, noise, model, config, 1.0, 0.5)


def test_convolution_and_drift_bounds(model, x):
    noise = _noise()
    config = _config()
    solution = ms.picard_solve(x, noise, model, config)
    convolution = ms.verify_convolution_bounds(solution.path, noise, model, config)
    assert convolution.passed, convolution.summary_lines()
    assert 'implied_c' in convolution.measurements
    drift = ms.verify_drift_bound(solution.path, model, config)
    assert drift.passed, drift.summary_lines()
    with pytest.raises(ValueError, match='positive'):
        ms.drift_constant(0.0, 0.6, 1.0, model)


def test_uniqueness(model, x):
    report = ms.verify_uniqueness(x, _noise(), model, _config())
    assert report.passed, report.summary_lines()


def test_truncation_sensitivity(model, x):
    noise = _noise()
    quiet = ms.truncation_sensitivity(np.zeros(WINDOW), noise, model, _config())
    assert quiet.passed
    loud = ms.truncation_sensitivity(x, noise, model, _config())
    assert loud.measurements['max_difference'] > 0.0


def test_truncation_sensitivity_central_support():
    window = 48
    model = LatticeModel(nu=1.0, lam=1.0, window=window)
    central = np.zeros(window)
    central[window // 4:3 * window // 4] = 1.0
    sigma = tuple(central * np.array(default_sigma(window, 0.3)))
    noise = sample_noise(NoiseConfig(hurst=0.75, sigma=sigma, horizon=1.0, grid_step=STEP, seed=8))
    x = central * default_initial_condition(window, 0.5, 2.0)
    report = ms.truncation_sensitivity(x, noise, model, _config())
    assert report.passed
    assert report.measurements['max_difference'] < 1e-6


def test_solution_norms_and_csv(model, x, tmp_path):
    solution = ms.picard_solve(x, _noise(), model, _config())
    beta_norm, sup_norm = ms.solution_norms(solution, default_exponents(0.75), rho=0.0)
    assert sup_norm == pytest.approx(np.max(np.linalg.norm(solution.path.values, axis=1)))
    assert beta_norm > sup_norm
    filename = ms.write_solution_csv(str(tmp_path / 'solution.csv'), solution)
    with open(filename) as handle:
        lines = handle.read().splitlines()
    assert lines[0] == 't,' + ','.join('node_{}'.format(i) for i in range(WINDOW))
    assert len(lines) == 1 + 129


def test_synthetic_noise_drives_solver(model, x):
    flat = NoisePath.from_function(lambda t: np.zeros(WINDOW), -1.0, 1.0, STEP)
    noisy = ms.picard_solve(x, _noise(), model, _config())
    quiet = ms.picard_solve(x, flat, model, _config())
    assert np.max(np.abs(noisy.final - quiet.final)) > 0.0
