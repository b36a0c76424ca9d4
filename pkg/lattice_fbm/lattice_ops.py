# -*- coding: utf-8 -*-
"""Discrete lattice operators, the semigroup exp(-A_lambda t) on a finite window, and the node-wise nonlinearities."""
import logging
from dataclasses import dataclass, field, replace
from functools import cached_property, partial
from typing import Callable, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .utils import VerificationReport, within

logger = logging.getLogger(__name__)

BOUNDARIES = ['periodic', 'zero-padded']
FAMILIES = ['generic', 'stability']

# sup |d^2/du^2 tanh(u)| = 4 / (3 sqrt(3))
TANH_SECOND_DERIVATIVE_BOUND = 4.0 / (3.0 * np.sqrt(3.0))


# =====================================================================================================================
# Node-wise scalar maps. Module level so that families survive pickling.
# =====================================================================================================================
def _tanh(a, u):
    return a * np.tanh(u)


def _tanh_d1(a, u):
    return a / np.cosh(u) ** 2


def _tanh_d2(a, u):
    return -2.0 * a * np.tanh(u) / np.cosh(u) ** 2


def _sin(b, u):
    return b * np.sin(u)


def _sin_d1(b, u):
    return b * np.cos(u)


def _sin_d2(b, u):
    return -b * np.sin(u)


def _cos_minus_one(a, u):
    return a * (np.cos(u) - 1.0)


def _cos_minus_one_d1(a, u):
    return -a * np.sin(u)


def _cos_minus_one_d2(a, u):
    return -a * np.cos(u)


def _stability_profile(amplitude, r):
    return amplitude * np.sin(np.minimum(r, np.pi / 2))


@dataclass(frozen=True)
class NonlinearityFamily:
    """
    Node-wise maps f_i = f, h_i = h with their derivatives and bounds.

    D_f, D_h bound |f'|, |h'|; M_f, M_h bound |f''|, |h''| (on [-delta, delta] for the stability kind).
    derivative_profile, when given, is the closed form of r -> sup_{||v|| <= r} (||Df(v)|| + ||Dh(v)||)
    and profile_lipschitz its Lipschitz constant.
    """
    kind: str
    f: Callable
    df: Callable
    d2f: Callable
    h: Callable
    dh: Callable
    d2h: Callable
    D_f: float
    M_f: float
    D_h: float
    M_h: float
    delta: float = np.inf
    derivative_profile: Optional[Callable] = None
    profile_lipschitz: Optional[float] = None

    def __post_init__(self):
        if self.kind not in FAMILIES:
            raise ValueError('family kind must be one of {}'.format(FAMILIES))
        if min(self.D_f, self.M_f, self.D_h, self.M_h) < 0:
            raise ValueError('derivative bounds must be nonnegative')
        if not self.delta > 0:
            raise ValueError('delta must be positive')

    @classmethod
    def generic(cls, a=0.5, b=0.5):
        """f_i(u) = a tanh(u), h_i(u) = b sin(u)"""
        return cls('generic', partial(_tanh, a), partial(_tanh_d1, a), partial(_tanh_d2, a),
                   partial(_sin, b), partial(_sin_d1, b), partial(_sin_d2, b),
                   D_f=abs(a), M_f=TANH_SECOND_DERIVATIVE_BOUND * abs(a), D_h=abs(b), M_h=abs(b))

    @classmethod
    def stability(cls, a=0.5, b=0.5, delta=1.0):
        """f_i(u) = a (cos u - 1), h_i(u) = b (1 - cos u); both vanish to second order at 0"""
        return cls('stability', partial(_cos_minus_one, a), partial(_cos_minus_one_d1, a),
                   partial(_cos_minus_one_d2, a), partial(_cos_minus_one, -b), partial(_cos_minus_one_d1, -b),
                   partial(_cos_minus_one_d2, -b), D_f=abs(a), M_f=abs(a), D_h=abs(b), M_h=abs(b), delta=delta,
                   derivative_profile=partial(_stability_profile, abs(a) + abs(b)),
                   profile_lipschitz=abs(a) + abs(b))

    def sampled_derivative_profile(self, r, samples=2001):
        """Upper estimate sup|f'| + sup|h'| over [-r, r], for families without a closed form."""
        grid = np.linspace(-r, r, samples)
        return float(np.max(np.abs(self.df(grid))) + np.max(np.abs(self.dh(grid))))

    def profile(self, r):
        if self.derivative_profile is not None:
            return float(self.derivative_profile(r))
        return self.sampled_derivative_profile(r)


class LatticeConfig(BaseModel):
    """Flat configuration of the lattice model and its nonlinearity family."""
    model_config = ConfigDict(frozen=True, extra='forbid', populate_by_name=True)

    nu: float = 1.0
    lam: float = Field(1.0, alias='lambda')
    window: int = 64
    boundary: Literal['periodic', 'zero-padded'] = 'periodic'
    family: Literal['generic', 'stability'] = 'stability'
    a: float = 0.5
    b: float = 0.5
    delta: float = 1.0
    initial_amplitude: float = 0.5
    initial_width: float = 4.0

    @model_validator(mode='after')
    def _check(self):
        if not self.nu > 0:
            raise ValueError('nu must be positive')
        if not self.lam > 0:
            raise ValueError('lambda must be positive')
        if self.window < 3:
            raise ValueError('window must contain at least 3 nodes')
        if self.a < 0 or self.b < 0:
            raise ValueError('a and b must be nonnegative')
        if not self.delta > 0:
            raise ValueError('delta must be positive')
        if not self.initial_width > 0:
            raise ValueError('initial_width must be positive')
        return self


@dataclass(frozen=True)
class LatticeModel:
    """nu, lambda, window N, boundary closure and nonlinearity family; the spectrum is computed once."""
    nu: float
    lam: float
    window: int
    boundary: str = 'periodic'
    family: NonlinearityFamily = field(default_factory=NonlinearityFamily.stability)

    def __post_init__(self):
        # nu = 0 is kept for the scalar semigroup; configs demand nu > 0
        if self.nu < 0:
            raise ValueError('nu must be nonnegative')
        if not self.lam > 0:
            raise ValueError('lambda must be positive')
        if self.window < 3:
            raise ValueError('window must contain at least 3 nodes')
        if self.boundary not in BOUNDARIES:
            raise ValueError('boundary must be one of {}'.format(BOUNDARIES))

    @classmethod
    def from_config(cls, cfg):
        if cfg.family == 'generic':
            family = NonlinearityFamily.generic(cfg.a, cfg.b)
        else:
            family = NonlinearityFamily.stability(cfg.a, cfg.b, cfg.delta)
        return cls(cfg.nu, cfg.lam, cfg.window, cfg.boundary, family)

    def with_family(self, family):
        return replace(self, family=family)

    @cached_property
    def _dense_spectrum(self):
        return np.linalg.eigh(dense_A_lambda(self))

    @cached_property
    def eigenvalues(self):
        """Eigenvalues of A_lambda; for the periodic closure in discrete Fourier order."""
        if self.boundary == 'periodic':
            k = np.arange(self.window)
            return self.lam + 2.0 * self.nu * (1.0 - np.cos(2.0 * np.pi * k / self.window))
        return self._dense_spectrum[0]

    def to_modes(self, u):
        """Coordinates in the eigenbasis of A_lambda, along the last axis."""
        if self.boundary == 'periodic':
            return np.fft.fft(u, axis=-1)
        return np.asarray(u) @ self._dense_spectrum[1]

    def from_modes(self, v):
        if self.boundary == 'periodic':
            return np.fft.ifft(v, axis=-1).real
        return np.asarray(v) @ self._dense_spectrum[1].T


def _neighbours(model, u):
    u = np.asarray(u, dtype=float)
    if model.boundary == 'periodic':
        return np.roll(u, 1, axis=-1), np.roll(u, -1, axis=-1)
    pad = np.zeros(u.shape[:-1] + (1,))
    return np.concatenate([pad, u[..., :-1]], axis=-1), np.concatenate([u[..., 1:], pad], axis=-1)


def apply_A(model, u):
    """(Au)_i = -nu (u_{i-1} - 2 u_i + u_{i+1})"""
    left, right = _neighbours(model, u)
    return -model.nu * (left - 2.0 * np.asarray(u, dtype=float) + right)


def apply_A_lambda(model, u):
    return apply_A(model, u) + model.lam * np.asarray(u, dtype=float)


def apply_B(model, u):
    """
    (Bu)_i = sqrt(nu) (u_{i+1} - u_i)
    With zero padding B maps onto the N + 1 links of the window, the two boundary links included.
    """
    u = np.asarray(u, dtype=float)
    root = np.sqrt(model.nu)
    if model.boundary == 'periodic':
        return root * (np.roll(u, -1, axis=-1) - u)
    pad = np.zeros(u.shape[:-1] + (1,))
    padded = np.concatenate([pad, u, pad], axis=-1)
    return root * (padded[..., 1:] - padded[..., :-1])


def apply_B_star(model, w):
    """Adjoint of apply_B: (B*w)_i = sqrt(nu) (w_{i-1} - w_i)"""
    w = np.asarray(w, dtype=float)
    root = np.sqrt(model.nu)
    if model.boundary == 'periodic':
        return root * (np.roll(w, 1, axis=-1) - w)
    return root * (w[..., :-1] - w[..., 1:])


def dense_A_lambda(model):
    return apply_A_lambda(model, np.eye(model.window))


def eigenvalues_A_lambda(model):
    return np.sort(model.eigenvalues)


def operator_norm_A_lambda(model):
    return float(np.max(model.eigenvalues))


def semigroup_apply(model, t, u):
    """
    exp(-A_lambda t) u by exact diagonalisation
    :param t: nonnegative time, or an array of times matching the leading axis of u
    :param u: vector or (time, node) matrix
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError('t must be nonnegative')
    decay = np.exp(-np.multiply.outer(t, model.eigenvalues))
    return model.from_modes(decay * model.to_modes(u))


def verify_semigroup_bounds(model, t_grid, beta=0.75, n_inner=65):
    """
    Check, with operator norms taken exactly over the spectrum,
      ||S(t)|| <= exp(-lambda t)
      ||S(t-s) - id|| <= ||A_lambda|| (t-s)
      ||S(t) - S(s)|| <= ||A_lambda|| (t-s) exp(-lambda s)
      |||S(t-.)|||_{beta,0,t} <= ||A_lambda|| t^(1-beta)
      |||S(t-.) - S(s-.)|||_{beta,0,s} <= ||A_lambda||^2 (t-s) s^(1-beta)
    for all s <= t from t_grid. Hoelder seminorms are grid suprema over n_inner points.
    """
    mu = model.eigenvalues
    norm_a = operator_norm_A_lambda(model)
    times = np.sort(np.asarray(t_grid, dtype=float))
    ratios = {'contraction': 0.0, 'identity': 0.0, 'increment': 0.0, 'holder': 0.0, 'holder_difference': 0.0}
    violations = dict.fromkeys(ratios, 0)

    def record(name, lhs, rhs):
        if rhs > 0:
            ratios[name] = max(ratios[name], lhs / rhs)
        if not within(lhs, rhs):
            violations[name] += 1

    def seminorm(values, grid):
        # values: (len(grid), n_modes); rows are spectral multipliers of an operator path
        best = 0.0
        for lag in range(1, grid.size):
            diffs = np.max(np.abs(values[lag:] - values[:-lag]), axis=1)
            best = max(best, float(np.max(diffs / (grid[lag:] - grid[:-lag]) ** beta)))
        return best

    for j, t in enumerate(times):
        record('contraction', float(np.max(np.exp(-mu * t))), np.exp(-model.lam * t))
        if t > 0:
            inner = np.linspace(0.0, t, n_inner)
            record('holder', seminorm(np.exp(-np.outer(t - inner, mu)), inner), norm_a * t ** (1.0 - beta))
        for s in times[:j + 1]:
            gap = t - s
            record('identity', float(np.max(-np.expm1(-mu * gap))), norm_a * gap)
            record('increment', float(np.max(np.exp(-mu * s) * -np.expm1(-mu * gap))),
                   norm_a * gap * np.exp(-model.lam * s))
            if s > 0 and gap > 0:
                inner = np.linspace(0.0, s, n_inner)
                path = np.exp(-np.outer(t - inner, mu)) - np.exp(-np.outer(s - inner, mu))
                record('holder_difference', seminorm(path, inner), norm_a ** 2 * gap * s ** (1.0 - beta))
    return VerificationReport('semigroup_bounds', ratios, violations)


def nonlinearity_f(model, u):
    return model.family.f(np.asarray(u, dtype=float))


def nonlinearity_h(model, u):
    """Diagonal entries of h(u); h(u)v = (h_i(u_i) v_i)_i."""
    return model.family.h(np.asarray(u, dtype=float))


def default_sigma(window, scale=1.0):
    """sigma_i = scale 2^(-|i - N/2| / 2)"""
    nodes = np.arange(window)
    return tuple(float(scale * 2.0 ** (-abs(i - window / 2.0) / 2.0)) for i in nodes)


def default_initial_condition(window, amplitude, width):
    """Gaussian bump of the given amplitude centred on node N/2."""
    nodes = np.arange(window)
    return amplitude * np.exp(-((nodes - window / 2.0) / width) ** 2 / 2.0)


def verify_f_properties(model, pairs):
    """
    On pairs (u, v): ||f(u) - f(v)|| <= D_f ||u - v||, ||Df(u)|| <= D_f and the Frechet remainder
    ||f(u + v) - f(u) - Df(u) v|| <= M_f ||v||^2 / 2.
    :param pairs: array (K, 2, N)
    """
    family = model.family
    ratios = {'lipschitz': 0.0, 'derivative': 0.0, 'frechet': 0.0}
    violations = dict.fromkeys(ratios, 0)
    for u, v in np.asarray(pairs, dtype=float):
        checks = {
            'lipschitz': (np.linalg.norm(family.f(u) - family.f(v)), family.D_f * np.linalg.norm(u - v)),
            'derivative': (np.max(np.abs(family.df(u))), family.D_f),
            'frechet': (np.linalg.norm(family.f(u + v) - family.f(u) - family.df(u) * v),
                        0.5 * family.M_f * np.linalg.norm(v) ** 2),
        }
        for name, (lhs, rhs) in checks.items():
            if rhs > 0:
                ratios[name] = max(ratios[name], lhs / rhs)
            if not within(lhs, rhs):
                violations[name] += 1
    return VerificationReport('f_properties', ratios, violations)


def verify_h_properties(model, quadruples):
    """
    On quadruples (u, v, w, z):
      ||h(u) - h(v) - (h(w) - h(z))||_HS <= sqrt(2) D_h ||u - v - (w - z)|| + 2 M_h ||u - w|| (||u - v|| + ||w - z||)
      ||h(u) - h(v)||_HS <= D_h ||u - v||,  ||Dh(u)|| <= D_h,
      ||h(u + e) - h(u) - Dh(u) e|| <= M_h ||e||^2 / 2 with e = z - w.
    The Hilbert-Schmidt norm of a diagonal operator is the Euclidean norm of its diagonal.
    :param quadruples: array (K, 4, N)
    """
    family = model.family
    ratios = {'mean_value': 0.0, 'lipschitz': 0.0, 'derivative': 0.0, 'frechet': 0.0}
    violations = dict.fromkeys(ratios, 0)
    norm = np.linalg.norm
    for u, v, w, z in np.asarray(quadruples, dtype=float):
        hu, hv, hw, hz = family.h(u), family.h(v), family.h(w), family.h(z)
        e = z - w
        checks = {
            'mean_value': (norm(hu - hv - (hw - hz)),
                           np.sqrt(2.0) * family.D_h * norm(u - v - (w - z))
                           + 2.0 * family.M_h * norm(u - w) * (norm(u - v) + norm(w - z))),
            'lipschitz': (norm(hu - hv), family.D_h * norm(u - v)),
            'derivative': (np.max(np.abs(family.dh(u))), family.D_h),
            'frechet': (norm(family.h(u + e) - hu - family.dh(u) * e), 0.5 * family.M_h * norm(e) ** 2),
        }
        for name, (lhs, rhs) in checks.items():
            if rhs > 0:
                ratios[name] = max(ratios[name], lhs / rhs)
            if not within(lhs, rhs):
                violations[name] += 1
    return VerificationReport('h_properties', ratios, violations)


def finite_difference_check(model, points, step=1e-5):
    """Largest deviation of Df, Dh from central differences over the given points."""
    family = model.family
    points = np.asarray(points, dtype=float)
    fd_f = (family.f(points + step) - family.f(points - step)) / (2.0 * step)
    fd_h = (family.h(points + step) - family.h(points - step)) / (2.0 * step)
    return float(np.max(np.abs(fd_f - family.df(points)))), float(np.max(np.abs(fd_h - family.dh(points))))
