#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Tests for `lattice_fbm.stability_lab`."""
import numpy as np
import pytest

from ..lattice_fbm import stability_lab as sl
from ..lattice_fbm.fbm_noise import NoiseConfig, NoisePath, sample_noise
from ..lattice_fbm.holder_spaces import SampledPath, default_exponents
from ..lattice_fbm.lattice_ops import LatticeModel, NonlinearityFamily, default_initial_condition, default_sigma
from ..lattice_fbm.mild_solver import SolverConfig

WINDOW = 6
STEP = 2.0 ** -5
HOLDER = default_exponents(0.75)


@pytest.fixture(scope='module')
def chi():
    return sl.CutoffFunction()


@pytest.fixture(scope='module')
def model():
    return LatticeModel(nu=1.0, lam=1.0, window=WINDOW)


@pytest.fixture(scope='module')
def noise():
    return sample_noise(NoiseConfig(hurst=0.75, sigma=default_sigma(WINDOW, 0.2), horizon=7.0, grid_step=STEP,
                                    seed=21))


def test_cutoff_profile(chi):
    assert chi.psi(0.5625) == pytest.approx(162582 / 248832, rel=1e-12)
    assert chi.psi(0.2) == 1.0
    assert chi.psi(1.5) == 0.0


def test_cutoff_apply(chi):
    small = np.array([0.3, 0.2, 0.1])
    np.testing.assert_array_equal(sl.cutoff_apply(chi, small, 1.0), small)
    np.testing.assert_array_equal(sl.cutoff_apply(chi, 3 * small, 0.5), 0.0)
    rows = sl.cutoff_apply(chi, np.stack([small, 10 * small]), 1.0)
    np.testing.assert_array_equal(rows[0], small)
    np.testing.assert_array_equal(rows[1], 0.0)
    with pytest.raises(ValueError, match='positive'):
        sl.cutoff_apply(chi, small, 0.0)
    with pytest.raises(ValueError, match='delta'):
        sl.cutoff_apply(chi, small, 2.0, delta=1.0)


def test_cutoff_derivative(chi):
    r, h = 0.8, 1e-6
    numeric = ((r + h) * chi.psi((r + h) ** 2) - (r - h) * chi.psi((r - h) ** 2)) / (2 * h)
    assert abs(numeric) <= chi.radial_first(r) + 1e-6
    first, second = sl.cutoff_derivative_bounds(chi)
    assert first == pytest.approx(2.9085, rel=1e-3)
    assert second > 0
    assert sl.scaled_second_bound(chi, 0.5, [0.0])[0] == 0.0
    with pytest.raises(ValueError):
        sl.scaled_second_bound(chi, 0.0, [0.1])


def test_stability_config():
    stab = sl.StabilityConfig()
    stab.check_lambda(1.0)
    assert sl.target_rate(1.0, 0.2) == pytest.approx(1.0 - np.log(1.0 + 0.2 * np.e))
    with pytest.raises(ValueError, match='eps_hat must lie'):
        sl.StabilityConfig(eps_hat=0.7).check_lambda(1.0)
    with pytest.raises(ValueError, match='mu must be smaller'):
        sl.StabilityConfig(mu=0.6).check_lambda(1.0)
    with pytest.raises(ValueError, match='n_max'):
        sl.StabilityConfig(n_max=0)


def test_radii(noise):
    R = sl.compute_R_omega(noise, 2, 0.2, 10.0, HOLDER)
    assert R == pytest.approx(0.2 / (20.0 * (1.0 + sl.unit_seminorm(noise, 2, HOLDER))))
    family = NonlinearityFamily.stability(0.5, 0.5, delta=1.0)
    assert sl.compute_R_hat(0.5, family) == pytest.approx(np.pi / 6, rel=1e-9)
    assert sl.compute_R_hat(0.95, family) == 1.0
    with pytest.raises(ValueError, match='R_hat'):
        sl.compute_R_hat(0.5, NonlinearityFamily.generic())
    with pytest.raises(ValueError, match='positive'):
        sl.compute_R_omega(noise, 0, 0.0, 1.0, HOLDER)


def test_stability_constant(model, chi):
    C = sl.stability_constant(model, chi, 0.5)
    assert C == pytest.approx(sl.cutoff_derivative_bounds(chi)[0] * 6.0 * 7.0)
    assert sl.stability_constant(model, chi, 3.0) == pytest.approx(3.0 * C)


def test_truncation_bounds(chi):
    family = NonlinearityFamily.stability(0.5, 0.5)
    R = 0.3
    r_hat = sl.compute_R_hat(R, family)
    values = np.random.default_rng(0).normal(scale=r_hat, size=(50, WINDOW))
    report = sl.verify_truncation_bounds(SampledPath(0.0, 0.1, values), family, chi, R, r_hat)
    assert report.passed, report.summary_lines()


def test_truncated_interval_solve(noise, model, chi):
    config = SolverConfig(holder=HOLDER, grid_step=STEP)
    zero = sl.truncated_interval_solve(np.zeros(WINDOW), noise, 1, 0.1, model, config, chi)
    np.testing.assert_array_equal(zero.values, 0.0)
    x = 1e-3 * np.ones(WINDOW)
    piece = sl.truncated_interval_solve(x, noise, 1, 0.1, model, config, chi)
    assert piece.n_points == 33
    np.testing.assert_allclose(piece.values[0], x)
    assert np.linalg.norm(piece.values[-1]) < np.linalg.norm(x)


def test_gronwall():
    np.testing.assert_allclose(sl.gronwall_bound(2.0, [1.0, 1.0]), [2.0, 4.0, 8.0])
    extremal = [1.0, 2.0, 4.0, 8.0]
    assert sl.gronwall_hypothesis(extremal, 1.0, np.ones(3))
    assert not sl.gronwall_hypothesis([1.0, 2.5], 1.0, np.ones(1))
    with pytest.raises(ValueError, match='nonnegative'):
        sl.gronwall_bound(-1.0, [1.0])


@pytest.mark.parametrize('seed', range(5))
def test_gronwall_randomized(seed):
    rng = np.random.default_rng(seed)
    for _ in range(50):
        n = int(rng.integers(1, 15))
        c = float(rng.uniform(0.0, 2.0))
        g = rng.uniform(0.0, 1.0, size=n)
        y = np.empty(n + 1)
        for k in range(n + 1):
            y[k] = (c + np.dot(g[:k], y[:k])) * rng.uniform(0.0, 1.0)
        assert sl.gronwall_hypothesis(y, c, g)
        assert np.all(y <= sl.gronwall_bound(c, g) * (1 + 1e-12))


def test_lemma_l8():
    assert sl.lemma_l8_check(0.5, 1.0, 0.5, 1.0, 100)
    assert sl.lemma_l8_crossing(0.5, 1.0, 0.5, 1.0) is None
    assert sl.lemma_l8_crossing(2.0, 0.1, 0.5, 1.0) == 0
    crossing = sl.lemma_l8_crossing(0.5, 0.1, 0.5, 1.0)
    assert crossing == int(np.floor(np.log(2.0) / 0.4)) + 1
    assert sl.lemma_l8_check(0.5, 0.1, 0.5, 1.0, crossing - 1)
    assert not sl.lemma_l8_check(0.5, 0.1, 0.5, 1.0, crossing)


@pytest.mark.parametrize('seed', range(3))
def test_lemma_l8_enumeration(seed):
    rng = np.random.default_rng(seed)
    for _ in range(100):
        v0, C_eps = rng.uniform(0.1, 2.0, size=2)
        mu, eps = rng.uniform(0.0, 1.0, size=2)
        n = int(rng.integers(1, 50))
        crossing = sl.lemma_l8_crossing(v0, mu, eps, C_eps)
        assert sl.lemma_l8_check(v0, mu, eps, C_eps, n) == (crossing is None or crossing > n)


def test_lemma_l21():
    report = sl.lemma_l21_check(sl.RadialMap.linear(2.0), np.linspace(0.05, 1.5, 10))
    assert report.passed
    assert report.measurements['kappa_ratio'] == pytest.approx(1.0, rel=1e-9)
    family = NonlinearityFamily.stability(0.5, 0.5, delta=1.0)
    ceiling = sl.RadialMap.from_family(family).profile(1.0)
    assert sl.lemma_l21_check(family, np.linspace(0.05, 0.95, 10) * ceiling).passed
    skipped = sl.lemma_l21_check(family, [0.5 * ceiling, 2.0 * ceiling])
    assert skipped.skipped == 1
    with pytest.raises(ValueError, match='stability family'):
        sl.RadialMap.from_family(NonlinearityFamily.generic())
    with pytest.raises(ValueError, match='delta'):
        sl.RadialMap.from_family(NonlinearityFamily.stability(delta=3.0))


def test_decay_rate_fit():
    fit = sl.decay_rate_fit(np.exp(-0.7 * np.arange(8)))
    assert fit.rate == pytest.approx(0.7)
    assert fit.r_squared == pytest.approx(1.0)
    assert fit.certifies(0.5)
    assert not fit.certifies(0.8)
    assert sl.decay_rate_fit(np.zeros(5)).rate == np.inf
    sparse = sl.decay_rate_fit([1.0, 0.0, 0.5, 0.0])
    assert sparse.insufficient
    assert not sparse.certifies(0.1)


def test_temperedness_of_linear_noise():
    def factory(seed):
        return NoisePath.from_function(lambda t: (seed + 1.0) * t, -1.0, 9.0, STEP)

    report = sl.temperedness_diagnostic(factory, [0, 1], 8, HOLDER)
    assert report.passed
    assert report.measurements['slope'] == pytest.approx(0.0, abs=1e-12)


def test_temperedness_rejects_growth():
    def factory(seed):
        return NoisePath.from_function(lambda t: (seed + 1.0) * np.exp(t), -1.0, 9.0, STEP)

    report = sl.temperedness_diagnostic(factory, [0, 1], 8, HOLDER)
    assert not report.passed
    assert report.measurements['slope'] == pytest.approx(1.0, rel=1e-6)


def test_temperedness_of_fbm():
    def factory(seed):
        return sample_noise(NoiseConfig(hurst=0.75, sigma=(1.0,), horizon=11.0, grid_step=STEP, seed=seed))

    report = sl.temperedness_diagnostic(factory, range(40), 10, HOLDER, confidence=0.999)
    assert report.passed, report.summary_lines()
    assert report.measurements['ci_low'] < report.measurements['ci_high']


@pytest.mark.slow
def test_temperedness_of_fbm_many_seeds():
    def factory(seed):
        return sample_noise(NoiseConfig(hurst=0.75, sigma=(1.0,), horizon=65.0, grid_step=STEP, seed=seed))

    report = sl.temperedness_diagnostic(factory, range(200), 64, HOLDER, confidence=0.95)
    assert report.passed, report.summary_lines()
    assert report.measurements['ci_low'] <= 0.0 <= report.measurements['ci_high']


def test_neighborhood_radius(noise, model, chi):
    stab = sl.StabilityConfig(n_max=6)
    C = sl.stability_constant(model, chi, 2.0)
    radius = sl.neighborhood_radius(noise, stab, model, HOLDER, C)
    r_hats = [sl.compute_R_hat(sl.compute_R_omega(noise, n, stab.eps_hat, C, HOLDER), model.family)
              for n in range(6)]
    assert radius == pytest.approx(min(r_hats) / 24.0)
    half = sl.neighborhood_radius(noise, sl.StabilityConfig(n_max=6, initial_scale=0.5), model, HOLDER, C)
    assert half == pytest.approx(radius / 2)


def test_empirical_young_constant(noise):
    assert sl.empirical_young_constant(noise, HOLDER) > 0.0


def test_concatenated_solve_certifies(noise, model, chi, tmp_path):
    stab = sl.StabilityConfig(n_max=6)
    config = SolverConfig(holder=HOLDER, grid_step=STEP)
    C = sl.stability_constant(model, chi, 2.0)
    shape = default_initial_condition(WINDOW, 1.0, 2.0)
    x = sl.neighborhood_radius(noise, stab, model, HOLDER, C) * shape / np.linalg.norm(shape)
    report = sl.concatenated_solve(x, noise, stab, model, config, chi=chi, C=C, check_consistency=True)
    assert report.truncation_inactive
    assert report.envelope_holds
    assert report.hypothesis_holds
    assert report.radius_condition
    assert report.fit.rate > stab.mu
    assert report.certified
    assert report.consistency_error < 1e-8
    assert len(report.norms) == 6
    assert report.path.n_points == 6 * 32 + 1
    lines = sl.stability_summary(report, stab)
    assert lines[-1] == 'certificate = granted'
    filename = sl.write_stability_csv(str(tmp_path / 'stability.csv'), report)
    with open(filename) as handle:
        assert handle.readline().strip() == ','.join(sl.STABILITY_COLUMNS)


def test_concatenated_solve_large_start(noise, model, chi):
    stab = sl.StabilityConfig(n_max=3)
    config = SolverConfig(holder=HOLDER, grid_step=STEP)
    C = sl.stability_constant(model, chi, 2.0)
    report = sl.concatenated_solve(np.ones(WINDOW), noise, stab, model, config, chi=chi, C=C)
    assert not report.truncation_inactive
    assert not report.certified
    assert sl.stability_summary(report, stab)[-1] == 'certificate = not granted'


def test_radius_condition_blocks_certificate(noise, model, chi):
    stab = sl.StabilityConfig(n_max=6, initial_scale=1.5)
    config = SolverConfig(holder=HOLDER, grid_step=STEP)
    C = sl.stability_constant(model, chi, 2.0)
    shape = default_initial_condition(WINDOW, 1.0, 2.0)
    x = sl.neighborhood_radius(noise, stab, model, HOLDER, C) * shape / np.linalg.norm(shape)
    report = sl.concatenated_solve(x, noise, stab, model, config, chi=chi, C=C)
    assert not report.radius_condition
    assert not report.certified
    assert 'radius_condition = False' in sl.stability_summary(report, stab)
