# -*- coding: utf-8 -*-
import logging
import math
from typing import List, Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .fbm_noise import SAMPLERS, NoiseConfig
from .holder_spaces import HolderConfig, default_exponents
from .lattice_ops import LatticeConfig, LatticeModel, default_sigma
from .mild_solver import SolverConfig
from .stability_lab import StabilityConfig

logger = logging.getLogger(__name__)

KINDS = ['fbm', 'integrate', 'solve', 'cocycle', 'stability', 'appendix']


class ConfigError(ValueError):
    """Configuration that cannot be parsed or violates a constraint; line is 1-based when known."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else 'line {}: {}'.format(line, message))
        self.line = line


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')


class ExperimentSection(_Section):
    kind: Literal['fbm', 'integrate', 'solve', 'cocycle', 'stability', 'appendix'] = 'fbm'
    out_dir: str = 'out'
    seeds: List[int] = Field(default_factory=lambda: [0])
    sampler: str = 'davies-harte'
    check_consistency: bool = False

    @model_validator(mode='after')
    def _check(self):
        if not self.seeds:
            raise ValueError('seeds must not be empty')
        if any(not 0 <= seed < 2 ** 64 for seed in self.seeds):
            raise ValueError('seed must be a 64-bit unsigned integer')
        if self.sampler not in SAMPLERS:
            raise ValueError('sampler must be one of {}'.format(SAMPLERS))
        return self


class NoiseSection(_Section):
    hurst: float = 0.75
    sigma_scale: float = 1.0
    sigma_profile: Literal['decaying', 'uniform'] = 'decaying'
    horizon: Optional[float] = None


class HolderSection(_Section):
    """Exponents default to the midpoint chain of the noise's Hurst parameter."""
    beta: Optional[float] = None
    beta_prime: Optional[float] = None
    alpha: Optional[float] = None
    rho: float = 0.0


class SolverSection(_Section):
    """SolverConfig without the exponents, which are resolved from the holder and noise sections."""
    T: float = 1.0
    grid_step: float = 2.0 ** -10
    picard_tol: float = 1e-8
    picard_max_iter: int = 100
    rho_auto: bool = True
    rho: float = 0.0
    rho_max: float = 2.0 ** 16
    backend: Literal['young', 'fractional'] = 'young'
    quad_nodes: int = 8


class CocycleSection(_Section):
    t: float = 0.5
    tau: float = 0.5
    tol: float = 1e-2


class AppendixSection(_Section):
    n_random: int = 1000
    kappa: float = 2.0
    ladder_size: int = 10


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')

    experiment: ExperimentSection = Field(default_factory=ExperimentSection)
    noise: NoiseSection = Field(default_factory=NoiseSection)
    holder: HolderSection = Field(default_factory=HolderSection)
    lattice: LatticeConfig = Field(default_factory=LatticeConfig)
    solver: SolverSection = Field(default_factory=SolverSection)
    stability: StabilityConfig = Field(default_factory=StabilityConfig)
    cocycle: CocycleSection = Field(default_factory=CocycleSection)
    appendix: AppendixSection = Field(default_factory=AppendixSection)

    @model_validator(mode='after')
    def _check(self):
        if not 0.5 < self.noise.hurst < 1.0:
            raise ValueError('hurst must lie in (0.5,1)')
        self.holder_config().check_hurst(self.noise.hurst)
        solver = self.solver_config()
        self.stability.check_lambda(self.lattice.lam)
        for key in ('t', 'tau'):
            ratio = getattr(self.cocycle, key) / solver.grid_step
            if abs(ratio - round(ratio)) > 1e-9 * max(ratio, 1.0) or ratio < 0:
                raise ValueError('cocycle {} must be a nonnegative multiple of grid_step'.format(key))
        if self.noise.horizon is not None and self.noise.horizon < self.required_horizon():
            raise ValueError('noise horizon must be at least {}'.format(self.required_horizon()))
        return self

    def holder_config(self):
        defaults = default_exponents(self.noise.hurst)
        values = {key: getattr(defaults, key) if getattr(self.holder, key) is None else getattr(self.holder, key)
                  for key in ('beta', 'beta_prime', 'alpha')}
        return HolderConfig(rho=self.holder.rho, **values)

    def solver_config(self):
        return SolverConfig(holder=self.holder_config(), **self.solver.model_dump())

    def model(self):
        return LatticeModel.from_config(self.lattice)

    def sigma(self):
        if self.noise.sigma_profile == 'uniform':
            return (float(self.noise.sigma_scale),) * self.lattice.window
        return default_sigma(self.lattice.window, self.noise.sigma_scale)

    def required_horizon(self):
        kind = self.experiment.kind
        horizon = self.solver_config().T
        if kind == 'cocycle':
            horizon = max(horizon, self.cocycle.t + self.cocycle.tau)
        if kind == 'stability':
            horizon = max(horizon, self.stability.n_max + 1.0)
        return horizon

    def noise_config(self, seed):
        step = self.solver_config().grid_step
        horizon = self.noise.horizon if self.noise.horizon is not None else self.required_horizon()
        horizon = math.ceil(horizon / step - 1e-9) * step
        return NoiseConfig(hurst=self.noise.hurst, sigma=self.sigma(), horizon=horizon, grid_step=step, seed=seed)

    def override(self, section, key, value):
        """Copy with one value replaced and every constraint checked again."""
        data = self.model_dump(by_alias=True)
        data[section][key] = value
        logger.debug('Overwriting {}.{} with {}'.format(section, key, value))
        return _validate(data)

    def echo(self):
        """Every resolved value, one 'section.key = value' line each."""
        resolved = self.model_dump(by_alias=True)
        resolved['holder'] = self.holder_config().model_dump()
        resolved['solver'] = self.solver_config().model_dump(exclude={'holder'})
        lines = []
        for section, values in resolved.items():
            for key, value in values.items():
                lines.append('{}.{} = {}'.format(section, key, value))
        return lines


_SECTIONS = {'experiment', 'noise', 'holder', 'lattice', 'solver', 'stability', 'cocycle', 'appendix'}
_SOLVER_KEYS = set(SolverSection.model_fields)


def _key_lines(text):
    # (section, key) -> 1-based line of the key
    lines = {}
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return lines
    if not isinstance(root, yaml.MappingNode):
        return lines
    for section_node, body in root.value:
        lines[(section_node.value, None)] = section_node.start_mark.line + 1
        if isinstance(body, yaml.MappingNode):
            for key_node, _ in body.value:
                lines[(section_node.value, key_node.value)] = key_node.start_mark.line + 1
    return lines


def _validate(data, lines=None):
    lines = lines or {}
    solver = data.get('solver') or {}
    if isinstance(solver, dict):
        unknown = sorted(set(solver) - _SOLVER_KEYS)
        if unknown:
            raise ConfigError('solver.{}: unknown key'.format(unknown[0]), lines.get(('solver', unknown[0])))
    try:
        return ExperimentConfig(**data)
    except ValidationError as err:
        first = err.errors()[0]
        location = [str(part) for part in first['loc']]
        message = first['msg'].replace('Value error, ', '')
        line = None
        if location:
            line = lines.get((location[0], location[1] if len(location) > 1 else None),
                             lines.get((location[0], None)))
        raise ConfigError('{}: {}'.format('.'.join(location) or 'config', message), line) from err
    except ValueError as err:
        raise ConfigError(str(err)) from err


def parse_config(text):
    """
    Parse and validate a YAML experiment configuration
    :param text: YAML document of flat sections; empty text gives every default
    :return: ExperimentConfig
    """
    try:
        data = yaml.load(text, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as err:
        line = err.problem_mark.line + 1 if err.problem_mark is not None else None
        raise ConfigError('could not parse configuration: {}'.format(err.problem), line) from err
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError('configuration must be a mapping of sections')
    lines = _key_lines(text)
    for section, body in data.items():
        if section not in _SECTIONS:
            raise ConfigError('unknown section {}'.format(section), lines.get((section, None)))
        if body is None:
            data[section] = {}
        elif not isinstance(body, dict):
            raise ConfigError('section {} must be a mapping'.format(section), lines.get((section, None)))
    cfg = _validate(data, lines)
    logger.debug('Configuration validated')
    return cfg


def load_config(filename=None):
    """Read a configuration file; no file means every default."""
    if filename is None:
        return parse_config('')
    try:
        with open(filename, encoding='utf-8') as handle:
            return parse_config(handle.read())
    except OSError as err:
        raise ConfigError('could not read {}: {}'.format(filename, err)) from err
