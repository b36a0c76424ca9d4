#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Tests for `lattice_fbm.input_validation`."""
import os

import pytest

from ..lattice_fbm.holder_spaces import default_exponents
from ..lattice_fbm.input_validation import ConfigError, SolverSection, load_config, parse_config

dir_path = os.path.dirname(os.path.realpath(__file__))
base_yaml = os.path.join(dir_path, "base.yaml")


def test_defaults():
    cfg = parse_config('')
    assert cfg.experiment.kind == 'fbm'
    assert cfg.experiment.seeds == [0]
    assert cfg.solver_config().grid_step == 2.0 ** -10
    assert cfg.solver_config().backend == 'young'
    assert cfg.holder_config() == default_exponents(0.75)
    assert cfg.model().window == 64
    assert len(cfg.sigma()) == 64


def test_load_base_yaml():
    cfg = load_config(base_yaml)
    assert cfg.experiment.kind == 'solve'
    assert cfg.experiment.seeds == [3]
    assert cfg.lattice.window == 8
    assert cfg.lattice.lam == 1.0
    assert cfg.solver_config().n_steps == 128
    assert cfg.noise_config(3).sigma == cfg.sigma()


def test_missing_file():
    with pytest.raises(ConfigError, match='could not read'):
        load_config(os.path.join(dir_path, 'no_such.yaml'))


def test_unknown_section_has_line():
    with pytest.raises(ConfigError) as err:
        parse_config('experiment:\n  kind: solve\ncolour:\n  hue: 1\n')
    assert err.value.line == 3
    assert str(err.value) == 'line 3: unknown section colour'


def test_unknown_key_has_line():
    with pytest.raises(ConfigError) as err:
        parse_config('noise:\n  hurst: 0.75\n  colour: red\n')
    assert err.value.line == 3
    assert 'noise.colour' in str(err.value)
    with pytest.raises(ConfigError, match='solver.steps: unknown key') as err:
        parse_config('solver:\n  T: 1.0\n  steps: 4\n')
    assert err.value.line == 3


def test_malformed_yaml():
    with pytest.raises(ConfigError, match='could not parse') as err:
        parse_config('noise:\n\thurst: 0.75\n')
    assert err.value.line == 2
    with pytest.raises(ConfigError, match='mapping of sections'):
        parse_config('- 1\n- 2\n')
    with pytest.raises(ConfigError, match='section noise must be a mapping'):
        parse_config('noise: 3\n')


def test_empty_section_takes_defaults():
    assert parse_config('noise:\n').noise.hurst == 0.75


@pytest.mark.parametrize('text,message', [
    ('noise:\n  hurst: 0.4\n', 'hurst must lie'),
    ('stability:\n  eps_hat: 0.9\n', 'eps_hat must lie'),
    ('stability:\n  mu: 0.9\n', 'mu must be smaller'),
    ('holder:\n  beta: 0.4\n', 'beta must exceed'),
    ('holder:\n  beta_prime: 0.74\n  alpha: 0.45\nnoise:\n  hurst: 0.7\n', 'beta_prime must be smaller than hurst'),
    ('cocycle:\n  t: 0.3\n', 'cocycle t must be'),
    ('experiment:\n  kind: stability\nnoise:\n  horizon: 5.0\n', 'noise horizon must be at least 21'),
    ('experiment:\n  seeds: []\n', 'seeds must not be empty'),
    ('experiment:\n  sampler: hosking\n', 'sampler must be one of'),
    ('lattice:\n  window: 2\n', 'window must contain'),
    ('solver:\n  grid_step: 0.3\n', 'grid_step must divide T'),
])
def test_constraint_violations(text, message):
    with pytest.raises(ConfigError, match=message):
        parse_config(text)


def test_lambda_alias():
    cfg = parse_config('lattice:\n  lambda: 2.0\n')
    assert cfg.lattice.lam == 2.0
    assert cfg.model().lam == 2.0


def test_uniform_sigma():
    cfg = parse_config('noise:\n  sigma_scale: 0.5\n  sigma_profile: uniform\nlattice:\n  window: 5\n')
    assert cfg.sigma() == (0.5,) * 5


def test_override():
    cfg = parse_config('')
    changed = cfg.override('solver', 'grid_step', 2.0 ** -5)
    assert changed.solver_config().grid_step == 2.0 ** -5
    assert cfg.solver_config().grid_step == 2.0 ** -10
    assert cfg.override('experiment', 'seeds', [4, 5]).experiment.seeds == [4, 5]
    assert cfg.override('lattice', 'lambda', 3.0).lattice.lam == 3.0
    with pytest.raises(ConfigError, match='hurst'):
        cfg.override('noise', 'hurst', 0.3)


def test_required_horizon():
    assert parse_config('').required_horizon() == 1.0
    cfg = parse_config('experiment:\n  kind: stability\nstability:\n  n_max: 4\n')
    assert cfg.required_horizon() == 5.0
    assert cfg.noise_config(7).horizon == 5.0
    assert cfg.noise_config(7).seed == 7
    cocycle = parse_config('experiment:\n  kind: cocycle\ncocycle:\n  t: 2.0\n')
    assert cocycle.required_horizon() == 2.5


def test_horizon_rounds_up_to_grid():
    cfg = parse_config('noise:\n  horizon: 1.3\nsolver:\n  grid_step: 0.25\n')
    assert cfg.noise_config(0).horizon == 1.5


def test_echo():
    lines = parse_config('').echo()
    assert 'experiment.kind = fbm' in lines
    assert 'lattice.lambda = 1.0' in lines
    assert 'solver.grid_step = 0.0009765625' in lines
    assert 'holder.beta = {}'.format(default_exponents(0.75).beta) in lines


def test_solver_section_is_typed():
    cfg = parse_config('solver:\n  grid_step: 0.0078125\n  backend: fractional\n')
    assert isinstance(cfg.solver, SolverSection)
    assert cfg.solver.grid_step == 2.0 ** -7
    assert cfg.solver_config().backend == 'fractional'
    assert cfg.solver_config().T == SolverSection().T
    with pytest.raises(ConfigError, match='solver.backend') as err:
        parse_config('solver:\n  T: 1.0\n  backend: milstein\n')
    assert err.value.line == 3


def test_override_logs_through_module_logger(caplog):
    with caplog.at_level('DEBUG'):
        parse_config('').override('solver', 'grid_step', 2.0 ** -5)
    assert any(record.name.endswith('input_validation') and 'Overwriting solver.grid_step' in record.getMessage()
               for record in caplog.records)
