# -*- coding: utf-8 -*-
"""Fractional Brownian motion sampling, the l2-valued lattice noise and the Wiener shift."""
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy import linalg, stats

from .holder_spaces import GRID_TOL, SampledPath, holder_seminorm_weighted

logger = logging.getLogger(__name__)

# Circulant eigenvalues below -EIGEN_TOL * max(eigenvalues) mean the embedding is not usable
EIGEN_TOL = 1e-10

SAMPLERS = ['davies-harte', 'cholesky']


class OutOfHorizonError(ValueError):
    """A shift or a window reaches outside the sampled noise."""


class NoiseConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')

    hurst: float
    sigma: Tuple[float, ...]
    horizon: float
    grid_step: float
    seed: int = 0

    @field_validator('hurst')
    @classmethod
    def _check_hurst(cls, value):
        if not 0.5 < value < 1.0:
            raise ValueError('hurst must lie in (0.5,1)')
        return value

    @field_validator('sigma')
    @classmethod
    def _check_sigma(cls, value):
        if len(value) == 0:
            raise ValueError('sigma needs at least one node')
        if not all(np.isfinite(value)):
            raise ValueError('sigma entries must be finite')
        if not any(s != 0 for s in value):
            raise ValueError('at least one sigma_i must be nonzero')
        return value

    @field_validator('seed')
    @classmethod
    def _check_seed(cls, value):
        if not 0 <= value < 2 ** 64:
            raise ValueError('seed must be a 64-bit unsigned integer')
        return value

    @model_validator(mode='after')
    def _check_grid(self):
        if not self.grid_step > 0:
            raise ValueError('grid_step must be positive')
        if not self.horizon > 0:
            raise ValueError('horizon must be positive')
        ratio = self.horizon / self.grid_step
        if abs(ratio - round(ratio)) > 1e-12 * ratio:
            raise ValueError('horizon must be an integer multiple of grid_step')
        return self

    @property
    def window(self):
        return len(self.sigma)

    @property
    def n_steps(self):
        return int(round(self.horizon / self.grid_step))


def fbm_covariance(s, t, hurst):
    """R(s, t) = (|s|^2H + |t|^2H - |t - s|^2H) / 2"""
    s, t = np.asarray(s, dtype=float), np.asarray(t, dtype=float)
    two_h = 2.0 * hurst
    return 0.5 * (np.abs(s) ** two_h + np.abs(t) ** two_h - np.abs(t - s) ** two_h)


def _fgn_autocovariance(hurst, n, step):
    lags = np.arange(n + 1, dtype=float)
    two_h = 2.0 * hurst
    return 0.5 * step ** two_h * (np.abs(lags + 1) ** two_h - 2 * lags ** two_h + np.abs(lags - 1) ** two_h)


def _davies_harte(hurst, n, step, rng):
    gamma = _fgn_autocovariance(hurst, n, step)
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    eigen = np.fft.fft(row).real
    if eigen.min() < -EIGEN_TOL * eigen.max():
        return None
    eigen = np.clip(eigen, 0.0, None)
    size = row.size
    noise = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return np.fft.fft(np.sqrt(eigen / size) * noise)[:n].real


def _cholesky(hurst, n, step, rng):
    cov = linalg.toeplitz(_fgn_autocovariance(hurst, n, step)[:n])
    return np.linalg.cholesky(cov) @ rng.standard_normal(n)


def _fgn(hurst, n, step, rng, method='davies-harte'):
    """n stationary increments of fBm with the given step; returns (increments, used_fallback)."""
    if method not in SAMPLERS:
        raise ValueError('I do not know this sampler: {}'.format(method))
    if method == 'davies-harte':
        increments = _davies_harte(hurst, n, step, rng)
        if increments is not None:
            return increments, False
        logger.warning('Circulant embedding is not positive definite for H={}, n={}; using Cholesky'.format(hurst, n))
    return _cholesky(hurst, n, step, rng), method == 'davies-harte'


def _node_rng(seed, node):
    # Counter-based stream per node: adding nodes never changes earlier streams
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(node,))))


def _uniform_step(grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError('a time grid needs at least 2 points')
    steps = np.diff(grid)
    step = steps.mean()
    if not step > 0 or np.max(np.abs(steps - step)) > GRID_TOL * max(1.0, abs(grid).max()):
        raise ValueError('the time grid must be uniform and increasing')
    return grid, step


def sample_fbm_1d(hurst, grid, seed, method='davies-harte'):
    """
    One fBm realisation on a uniform grid
    :param hurst: Hurst parameter in (1/2, 1)
    :param grid: uniform increasing times; 0 must be a grid point or reachable from the grid by whole steps
    :param seed: master seed
    :param method: 'davies-harte' (Cholesky fallback) or 'cholesky'
    :return: array of path values, zero at t = 0
    """
    if not 0.5 < hurst < 1.0:
        raise ValueError('hurst must lie in (0.5,1)')
    grid, step = _uniform_step(grid)
    first = grid[0] / step
    if abs(first - round(first)) > GRID_TOL * max(1.0, abs(first)):
        raise ValueError('the grid must contain 0 or reach it by whole steps')
    first = int(round(first))
    low, high = min(first, 0), max(first + grid.size - 1, 0)
    increments, fallback = _fgn(hurst, high - low, step, _node_rng(seed, 0), method)
    if fallback:
        logger.warning('Sample for seed {} used the Cholesky fallback'.format(seed))
    path = np.concatenate([[0.0], np.cumsum(increments)])
    path -= path[-low]
    return path[first - low:first - low + grid.size]


@dataclass(frozen=True)
class NoisePath:
    """Two-sided, grid-sampled noise; samples are indexed (time, node) and vanish at t = 0."""
    config: NoiseConfig
    samples: np.ndarray
    origin_index: int
    step: float
    fallback_nodes: Tuple[int, ...] = ()

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.ndim == 1:
            samples = samples[:, None]
        if not np.all(np.isfinite(samples)):
            raise ValueError('noise samples contain non-finite entries')
        if not 0 <= self.origin_index < samples.shape[0]:
            raise ValueError('origin index outside the samples')
        if np.any(samples[self.origin_index] != 0.0):
            raise ValueError('noise must vanish at t = 0')
        samples.setflags(write=False)
        object.__setattr__(self, 'samples', samples)

    @classmethod
    def from_function(cls, func, t_min, t_max, step, hurst=0.75):
        """Synthetic noise omega(t) = func(t) - func(0) on [t_min, t_max]; t_min <= 0 <= t_max."""
        low, high = int(round(t_min / step)), int(round(t_max / step))
        if low > 0 or high < 0:
            raise ValueError('synthetic noise must contain t = 0')
        times = step * np.arange(low, high + 1)
        base = np.atleast_1d(np.asarray(func(0.0), dtype=float))
        samples = np.array([np.atleast_1d(func(t)) - base for t in times], dtype=float)
        samples[-low] = 0.0
        config = NoiseConfig(hurst=hurst, sigma=(1.0,) * samples.shape[1],
                             horizon=step * max(-low, high, 1), grid_step=step)
        return cls(config, samples, -low, step)

    @property
    def window(self):
        return self.samples.shape[1]

    @property
    def times(self):
        return self.step * (np.arange(self.samples.shape[0]) - self.origin_index)

    @property
    def t_min(self):
        return -self.step * self.origin_index

    @property
    def t_max(self):
        return self.step * (self.samples.shape[0] - 1 - self.origin_index)

    def index_of(self, t):
        position = t / self.step
        index = int(round(position))
        if abs(position - index) > GRID_TOL * max(1.0, abs(position)):
            raise ValueError('time {} is not a multiple of the noise step {}'.format(t, self.step))
        index += self.origin_index
        if not 0 <= index < self.samples.shape[0]:
            raise OutOfHorizonError('time {} lies outside the sampled window [{}, {}]'.format(
                t, self.t_min, self.t_max))
        return index

    def covers(self, t0, t1):
        return self.t_min - GRID_TOL * self.step <= t0 and t1 <= self.t_max + GRID_TOL * self.step

    def segment(self, t0, t1):
        """The noise on [t0, t1] as a SampledPath."""
        if not self.covers(t0, t1):
            raise OutOfHorizonError('window [{}, {}] exceeds the sampled horizon [{}, {}]'.format(
                t0, t1, self.t_min, self.t_max))
        i0, i1 = self.index_of(t0), self.index_of(t1)
        return SampledPath(t0, self.step, self.samples[i0:i1 + 1])

    def subsample(self, factor):
        """Keep every factor-th grid point, t = 0 included."""
        factor = int(factor)
        if factor < 1:
            raise ValueError('subsampling factor must be a positive integer')
        start = self.origin_index % factor
        return NoisePath(self.config, self.samples[start::factor], self.origin_index // factor,
                         self.step * factor, self.fallback_nodes)


def sample_noise(config, method='davies-harte'):
    """
    The lattice noise B^H(t) = sum_i sigma_i B_i^H(t) e_i on [-T_max, T_max]
    :param config: NoiseConfig
    :param method: sampler name
    :return: NoisePath
    """
    n = config.n_steps
    columns, fallback_nodes = [], []
    for node, sigma in enumerate(config.sigma):
        if sigma == 0.0:
            columns.append(np.zeros(2 * n + 1))
            continue
        # One embedding over [-T, T] keeps covariances across t = 0 exact
        increments, fallback = _fgn(config.hurst, 2 * n, config.grid_step, _node_rng(config.seed, node), method)
        if fallback:
            fallback_nodes.append(node)
        path = np.concatenate([[0.0], np.cumsum(increments)])
        columns.append(sigma * (path - path[n]))
    logger.debug('Sampled {} nodes with {} grid points each'.format(config.window, 2 * n + 1))
    return NoisePath(config, np.column_stack(columns), n, config.grid_step, tuple(fallback_nodes))


def wiener_shift(path, tau, window=None):
    """
    theta_tau omega(.) = omega(. + tau) - omega(tau)
    :param path: NoisePath
    :param tau: shift, a multiple of the grid step inside the sampled window
    :param window: optional (t0, t1) that the shifted path has to cover
    :return: NoisePath
    """
    new_origin = path.index_of(tau)
    shifted = NoisePath(path.config, path.samples - path.samples[new_origin], new_origin, path.step,
                        path.fallback_nodes)
    if window is not None and not shifted.covers(*window):
        raise OutOfHorizonError('shift by {} leaves [{}, {}] outside the sampled horizon'.format(tau, *window))
    return shifted


def estimate_holder_seminorm_path(path, beta_prime, window):
    """Grid supremum of ||omega(t) - omega(s)|| / (t - s)^beta' over the window; a lower bound of the seminorm."""
    if not beta_prime < path.config.hurst:
        raise ValueError('beta_prime must be smaller than hurst')
    t0, t1 = window
    if path.index_of(t1) - path.index_of(t0) < 1:
        raise ValueError('window must contain at least 2 grid points')
    return holder_seminorm_weighted(path.segment(t0, t1), beta_prime, 0.0)


def hurst_scale_regression(path, node=0, window=None, max_lag=None, statistic='rms'):
    """
    Slope of log increment size against log lag for dyadic lags.

    'sup' regresses the largest increment per lag, whose extreme-value factor shrinks with the lag
    and biases the slope low; 'rms' regresses the root-mean-square increment.
    """
    t0, t1 = window if window is not None else (0.0, path.t_max)
    values = path.segment(t0, t1).values[:, node]
    max_lag = max_lag or max(2, values.size // 16)
    lags = 2 ** np.arange(int(np.log2(max_lag)) + 1)
    sizes = []
    for lag in lags:
        increments = np.abs(values[lag:] - values[:-lag])
        if statistic == 'sup':
            sizes.append(increments.max())
        elif statistic == 'rms':
            sizes.append(np.sqrt(np.mean(increments ** 2)))
        else:
            raise ValueError('I do not know this statistic: {}'.format(statistic))
    fit = stats.linregress(np.log(lags * path.step), np.log(sizes))
    return float(fit.slope)
