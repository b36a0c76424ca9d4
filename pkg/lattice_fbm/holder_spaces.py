# -*- coding: utf-8 -*-
"""Grid evaluation of the rho-weighted Hoelder norms."""
import logging
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy import integrate, optimize

logger = logging.getLogger(__name__)

# Relative tolerance for deciding that a time sits on a grid point
GRID_TOL = 1e-9


class HolderConfig(BaseModel):
    """Exponent chain 1/2 < beta < beta_prime < H, 1 - beta_prime < alpha < beta, and the weight rho."""
    model_config = ConfigDict(frozen=True, extra='forbid')

    beta: float
    beta_prime: float
    alpha: float
    rho: float = 0.0

    @model_validator(mode='after')
    def _check_chain(self):
        if not self.beta > 0.5:
            raise ValueError('beta must exceed 1/2')
        if not self.beta < self.beta_prime:
            raise ValueError('beta must be smaller than beta_prime')
        if not self.beta_prime < 1.0:
            raise ValueError('beta_prime must be smaller than 1')
        low, high = 1.0 - self.beta_prime, self.beta
        if not low < self.alpha < high:
            raise ValueError('alpha must lie in (1-beta_prime, beta) = ({:.4g}, {:.4g})'.format(low, high))
        if self.rho < 0:
            raise ValueError('rho must be nonnegative')
        return self

    def check_hurst(self, hurst):
        """Cross-check beta_prime < H against the active noise."""
        if not self.beta_prime < hurst:
            raise ValueError('beta_prime must be smaller than hurst ({} >= {})'.format(self.beta_prime, hurst))
        return self

    def with_rho(self, rho):
        if rho < 0:
            raise ValueError('rho must be nonnegative')
        return self.model_copy(update={'rho': float(rho)})


def default_exponents(hurst, rho=0.0):
    """
    Midpoint exponents for a given Hurst parameter
    :param hurst: Hurst parameter in (1/2, 1)
    :param rho: weight carried by the returned config
    :return: HolderConfig with beta = 1/2 + (H-1/2)/3, beta' = 1/2 + 2(H-1/2)/3
        and alpha the midpoint of (1-beta', beta)
    """
    if not 0.5 < hurst < 1.0:
        raise ValueError('hurst must lie in (0.5,1)')
    beta = 0.5 + (hurst - 0.5) / 3.0
    beta_prime = 0.5 + 2.0 * (hurst - 0.5) / 3.0
    alpha = (1.0 - beta_prime + beta) / 2.0
    return HolderConfig(beta=beta, beta_prime=beta_prime, alpha=alpha, rho=rho)


@dataclass(frozen=True)
class SampledPath:
    """A function [t_start, t_end] -> R^N sampled on a uniform grid; values are indexed (time, node)."""
    t_start: float
    step: float
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise ValueError('path values must be a (time, node) matrix, got shape {}'.format(values.shape))
        if values.shape[0] < 2:
            raise ValueError('a sampled path needs at least 2 grid points')
        if not self.step > 0:
            raise ValueError('grid step must be positive')
        if not np.all(np.isfinite(values)):
            raise ValueError('sampled path contains non-finite entries')
        values.setflags(write=False)
        object.__setattr__(self, 't_start', float(self.t_start))
        object.__setattr__(self, 'step', float(self.step))
        object.__setattr__(self, 'values', values)

    @classmethod
    def from_function(cls, func, t_start, t_end, step):
        """Sample ``func(t) -> vector`` on the grid t_start, t_start + step, ..., t_end."""
        count = int(round((t_end - t_start) / step))
        times = t_start + step * np.arange(count + 1)
        return cls(t_start, step, np.array([np.atleast_1d(func(t)) for t in times], dtype=float))

    @property
    def n_points(self):
        return self.values.shape[0]

    @property
    def window(self):
        return self.values.shape[1]

    @property
    def t_end(self):
        return self.t_start + self.step * (self.n_points - 1)

    @property
    def times(self):
        return self.t_start + self.step * np.arange(self.n_points)

    def index_of(self, t):
        position = (t - self.t_start) / self.step
        index = int(round(position))
        if abs(position - index) > GRID_TOL * max(1.0, abs(position)):
            raise ValueError('time {} is not a grid point (step {})'.format(t, self.step))
        if index < 0 or index >= self.n_points:
            raise ValueError('time {} lies outside [{}, {}]'.format(t, self.t_start, self.t_end))
        return index

    def value_at(self, t):
        return self.values[self.index_of(t)]

    def restrict(self, t0, t1):
        i0, i1 = self.index_of(t0), self.index_of(t1)
        return SampledPath(self.t_start + i0 * self.step, self.step, self.values[i0:i1 + 1])

    def node(self, i):
        return SampledPath(self.t_start, self.step, self.values[:, i])

    def shifted(self, t_start):
        """Same samples, relabelled to start at t_start."""
        return SampledPath(t_start, self.step, self.values)

    def _check_grid(self, other):
        if self.n_points != other.n_points or abs(self.step - other.step) > GRID_TOL * self.step \
                or abs(self.t_start - other.t_start) > GRID_TOL * max(1.0, self.step):
            raise ValueError('paths live on different grids')

    def __add__(self, other):
        self._check_grid(other)
        return SampledPath(self.t_start, self.step, self.values + other.values)

    def __sub__(self, other):
        self._check_grid(other)
        return SampledPath(self.t_start, self.step, self.values - other.values)

    def __neg__(self):
        return SampledPath(self.t_start, self.step, -self.values)

    def __mul__(self, factor):
        return SampledPath(self.t_start, self.step, self.values * float(factor))

    __rmul__ = __mul__


def _weights(path, rho):
    return np.exp(-rho * (path.times - path.t_start))


def sup_norm_weighted(path, rho=0.0):
    """max over grid points s of exp(-rho (s - T1)) ||u(s)||"""
    return float(np.max(_weights(path, rho) * np.linalg.norm(path.values, axis=1)))


def holder_seminorm_weighted(path, beta, rho=0.0):
    """
    Weighted Hoelder seminorm as a supremum over all grid pairs s < t.

    Lags are scanned in increasing order. For a lag d the weighted difference is at most
    a(t) + exp(-rho d) a(s) with a the weighted pointwise norm, which gives an early exit.
    The result is a lower bound of the seminorm of any function interpolating the samples.
    """
    values = path.values
    weights = _weights(path, rho)
    weighted = weights * np.linalg.norm(values, axis=1)
    tail_max = np.maximum.accumulate(weighted[::-1])[::-1]
    overall_max = weighted.max()
    best = 0.0
    for lag in range(1, path.n_points):
        span = lag * path.step
        scale = span ** beta
        if best * scale >= tail_max[lag] + np.exp(-rho * span) * overall_max:
            break
        diffs = np.linalg.norm(values[lag:] - values[:-lag], axis=1)
        best = max(best, float(np.max(weights[lag:] * diffs)) / scale)
    return best


def holder_norm(path, beta, rho=0.0):
    return sup_norm_weighted(path, rho) + holder_seminorm_weighted(path, beta, rho)


def norm_equivalence(path, beta, rho):
    """Return (exp(-rho (T2 - T1)) ||u||_{beta,0}, ||u||_{beta,rho}, ||u||_{beta,0})."""
    unweighted = holder_norm(path, beta, 0.0)
    span = path.t_end - path.t_start
    return np.exp(-rho * span) * unweighted, holder_norm(path, beta, rho), unweighted


def product_estimate(l_path, g_path, beta, rho):
    """
    Both sides of ||l g||_{beta,rho} <= ||l||_{inf,0} ||g||_{beta,rho} + ||g||_{inf,rho} |||l|||_{beta,0}
    :param l_path: scalar path (one node)
    :param g_path: path on the same grid
    :return: (lhs, rhs)
    """
    if l_path.window != 1:
        raise ValueError('the multiplier must be a scalar path')
    l_path._check_grid(g_path)
    product = SampledPath(g_path.t_start, g_path.step, l_path.values * g_path.values)
    lhs = holder_norm(product, beta, rho)
    rhs = sup_norm_weighted(l_path, 0.0) * holder_norm(g_path, beta, rho) \
        + sup_norm_weighted(g_path, rho) * holder_seminorm_weighted(l_path, beta, 0.0)
    return lhs, rhs


def _check_k_domain(rho, a, b, T):
    if not a > -1:
        raise ValueError('a must exceed -1')
    if not b > -1:
        raise ValueError('b must exceed -1')
    if not a + b + 1 > 0:
        raise ValueError('a + b + 1 must be positive')
    if not T > 0:
        raise ValueError('T must be positive')
    if rho < 0:
        raise ValueError('rho must be nonnegative')


def _lag_integral(lag, rho, a, b):
    # int_s^t e^{-rho(t-r)} (r-s)^a (t-r)^b dr depends on t - s only; rescale to [0, 1]
    value, _ = integrate.quad(lambda x: np.exp(-rho * lag * (1.0 - x)), 0.0, 1.0,
                              weight='alg', wvar=(a, b), limit=200)
    return lag ** (a + b + 1) * value


def k_rho(rho, a, b, T, n_lags=64):
    """
    sup over 0 <= s < t <= T of int_s^t exp(-rho (t-r)) (r-s)^a (t-r)^b dr

    The supremum over the lag t - s is located on a logarithmic ladder of lags and polished with a
    bounded scalar search around the best rung. It is a grid approximation from below.
    """
    _check_k_domain(rho, a, b, T)
    lags = T * np.logspace(-8, 0, n_lags)
    values = np.array([_lag_integral(lag, rho, a, b) for lag in lags])
    best = int(np.argmax(values))
    low = np.log(lags[max(best - 1, 0)])
    high = np.log(lags[min(best + 1, n_lags - 1)])
    res = optimize.minimize_scalar(lambda y: -_lag_integral(np.exp(y), rho, a, b),
                                   bounds=(low, high), method='bounded', options={'xatol': 1e-10})
    return float(max(values[best], -res.fun))


def holder_constant_c_beta(beta):
    """sup over x > 0 of (1 - exp(-x)) / x**beta"""
    if not 0 < beta < 1:
        raise ValueError('beta must lie in (0,1)')

    def negative(y):
        x = np.exp(y)
        return np.expm1(-x) / x ** beta

    ladder = np.linspace(-20.0, 20.0, 401)
    best = int(np.argmin([negative(y) for y in ladder]))
    res = optimize.minimize_scalar(negative, bounds=(ladder[max(best - 1, 0)], ladder[min(best + 1, 400)]),
                                   method='bounded', options={'xatol': 1e-12})
    return float(-res.fun)
