# -*- coding: utf-8 -*-
"""
Mild solutions of du = (-A_lambda u + f(u)) dt + h(u) d omega by Picard iteration.

On the grid t_k = k dt the map
    T(u)[t_k] = S(t_k) x + sum_{j<k} S(t_k - t_j) (dt f(u_j) + h(u_j) (omega_{j+1} - omega_j))
is evaluated in the eigenbasis of A_lambda, where the split
    J(t_{k+1}) = S(dt) (J(t_k) + increment_k)
reuses the partial sums of the convolution; one application costs O(M N log N).
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from .fbm_noise import NoisePath, OutOfHorizonError, wiener_shift
from .holder_spaces import (GRID_TOL, HolderConfig, SampledPath, holder_constant_c_beta, holder_norm,
                            holder_seminorm_weighted, k_rho, sup_norm_weighted)
from .lattice_ops import LatticeModel, operator_norm_A_lambda, semigroup_apply
from .utils import VerificationReport, within, write_path_csv
from .young_integral import OperatorPath, integral_fractional

logger = logging.getLogger(__name__)

CONTRACTION_TARGET = 0.5
BACKENDS = ['young', 'fractional']


class ConvergenceError(RuntimeError):
    """Picard iteration did not converge; carries the contraction history and the last rho."""

    def __init__(self, message, factors=(), rho=0.0):
        super().__init__(message)
        self.factors = tuple(factors)
        self.rho = rho


class SolverConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')

    holder: HolderConfig
    T: float = 1.0
    grid_step: float = 2.0 ** -10
    picard_tol: float = 1e-8
    picard_max_iter: int = 100
    rho_auto: bool = True
    rho: float = 0.0
    rho_max: float = 2.0 ** 16
    backend: Literal['young', 'fractional'] = 'young'
    quad_nodes: int = 8

    @model_validator(mode='after')
    def _check(self):
        if not self.T > 0:
            raise ValueError('T must be positive')
        if not self.grid_step > 0:
            raise ValueError('grid_step must be positive')
        ratio = self.T / self.grid_step
        if abs(ratio - round(ratio)) > 1e-9 * max(ratio, 1.0):
            raise ValueError('grid_step must divide T')
        if not self.picard_tol > 0:
            raise ValueError('picard_tol must be positive')
        if self.picard_max_iter < 1:
            raise ValueError('picard_max_iter must be at least 1')
        if self.rho < 0 or self.rho > self.rho_max:
            raise ValueError('rho must lie in [0, rho_max]')
        if self.quad_nodes < 2:
            raise ValueError('quad_nodes must be at least 2')
        return self

    @property
    def n_steps(self):
        return int(round(self.T / self.grid_step))

    @property
    def times(self):
        return self.grid_step * np.arange(self.n_steps + 1)

    def with_horizon(self, T):
        return self.model_copy(update={'T': float(T)})


@dataclass(frozen=True)
class MildSolution:
    """
    :param path: solution on [0, T]
    :param contraction_factors: ratios of successive difference norms, in the weighted norm active at the time
    :param residual: weighted norm of the last Picard difference
    :param ball_radius_used: R(x, rho) = 2 (1 + ||A_lambda|| T^(1-beta)) ||x|| + 1
    :param max_iterate_norm: largest weighted norm of an iterate
    """
    path: SampledPath
    iterations: int
    contraction_factors: Tuple[float, ...]
    residual: float
    ball_radius_used: float
    rho: float
    max_iterate_norm: float
    backend: str = 'young'

    @property
    def within_ball(self):
        return within(self.max_iterate_norm, self.ball_radius_used)

    @property
    def final(self):
        return self.path.values[-1]


def ball_radius(model, config, x):
    return 2.0 * (1.0 + operator_norm_A_lambda(model) * config.T ** (1.0 - config.holder.beta)) \
        * float(np.linalg.norm(x)) + 1.0


def _noise_segment(noise, model, config):
    if abs(noise.step - config.grid_step) > GRID_TOL * config.grid_step:
        raise ValueError('noise step {} differs from the solver step {}'.format(noise.step, config.grid_step))
    if noise.window != model.window:
        raise ValueError('noise has {} nodes, the lattice window {}'.format(noise.window, model.window))
    return noise.segment(0.0, config.T)


def _check_iterate(u, config, model):
    if abs(u.t_start) > GRID_TOL or abs(u.step - config.grid_step) > GRID_TOL * config.grid_step \
            or u.n_points != config.n_steps + 1 or u.window != model.window:
        raise ValueError('iterate does not live on the solver grid')


@lru_cache(maxsize=None)
def _cell_weights(alpha, quad_nodes):
    """Weights of the two end values of a linear integrand on one cell under the fractional formula."""
    omega = SampledPath(0.0, 1.0, [[0.0], [1.0]])
    left = integral_fractional(OperatorPath(0.0, 1.0, [[1.0], [0.0]]), omega, 0.0, 1.0, alpha,
                               quad_nodes=quad_nodes)
    right = integral_fractional(OperatorPath(0.0, 1.0, [[0.0], [1.0]]), omega, 0.0, 1.0, alpha,
                                quad_nodes=quad_nodes)
    return float(left[0]), float(right[0])


def _modal_convolution(model, dt, left, right=None):
    """J_0 = 0, J_{k+1} = S(dt) (J_k + left_k) + right_k, returned in node coordinates."""
    decay = np.exp(-model.eigenvalues * dt)
    left_modes = model.to_modes(left)
    right_modes = None if right is None else model.to_modes(right)
    acc = np.zeros((left.shape[0] + 1, left.shape[1]), dtype=left_modes.dtype)
    for k in range(left.shape[0]):
        acc[k + 1] = decay * (acc[k] + left_modes[k])
        if right_modes is not None:
            acc[k + 1] += right_modes[k]
    return model.from_modes(acc)


def _stochastic_convolution(u_values, increments, model, config, backend):
    family = model.family
    if backend == 'fractional':
        w_left, w_right = _cell_weights(config.holder.alpha, config.quad_nodes)
        return _modal_convolution(model, config.grid_step, w_left * family.h(u_values[:-1]) * increments,
                                  w_right * family.h(u_values[1:]) * increments)
    return _modal_convolution(model, config.grid_step, family.h(u_values[:-1]) * increments)


def _apply(u_values, free, increments, model, config, backend):
    family = model.family
    drift = config.grid_step * family.f(u_values[:-1])
    if backend == 'fractional':
        w_left, w_right = _cell_weights(config.holder.alpha, config.quad_nodes)
        convolution = _modal_convolution(model, config.grid_step,
                                         drift + w_left * family.h(u_values[:-1]) * increments,
                                         w_right * family.h(u_values[1:]) * increments)
    else:
        convolution = _modal_convolution(model, config.grid_step, drift + family.h(u_values[:-1]) * increments)
    return free + convolution


def picard_map(x, u, noise, model, config, backend=None):
    """
    One application of the mild-solution map at every grid time of [0, T]
    :param x: initial value, length N
    :param u: SampledPath on the solver grid
    :param noise: NoisePath with the solver step, covering [0, T]
    :return: SampledPath
    """
    backend = backend or config.backend
    if backend not in BACKENDS:
        raise ValueError('backend must be one of {}'.format(BACKENDS))
    _check_iterate(u, config, model)
    increments = np.diff(_noise_segment(noise, model, config).values, axis=0)
    free = semigroup_apply(model, config.times, np.asarray(x, dtype=float))
    return SampledPath(0.0, config.grid_step, _apply(u.values, free, increments, model, config, backend))


def _next_rho(rho):
    return 1.0 if rho == 0 else 2.0 * rho


def picard_solve(x, noise, model, config, initial=None):
    """
    Iterate the mild-solution map from u0 = S(.)x (or a given initial iterate).

    The contraction factor is measured in the rho-weighted beta-norm. With rho_auto, rho moves
    along 0, 1, 2, 4, ... whenever a factor reaches 1/2; the iterates themselves do not depend on rho.
    The iteration stops once the last difference is below picard_tol both in the weighted beta-norm
    and in the unweighted sup norm.

    :raises ConvergenceError: rho would exceed rho_max, or picard_max_iter was reached
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (model.window,):
        raise ValueError('initial value must have {} entries'.format(model.window))
    increments = np.diff(_noise_segment(noise, model, config).values, axis=0)
    beta, tol = config.holder.beta, config.picard_tol
    free = semigroup_apply(model, config.times, x)
    if initial is None:
        current = free
    else:
        _check_iterate(initial, config, model)
        current = initial.values
    rho = config.rho
    radius = ball_radius(model, config, x)
    max_norm = holder_norm(SampledPath(0.0, config.grid_step, current), beta, rho)
    factors, previous, previous_norm = [], None, 0.0
    for iteration in range(1, config.picard_max_iter + 1):
        updated = _apply(current, free, increments, model, config, config.backend)
        diff = SampledPath(0.0, config.grid_step, updated - current)
        weighted = holder_norm(diff, beta, rho)
        if previous is not None and previous_norm > 0:
            factor = weighted / previous_norm
            factors.append(factor)
            if config.rho_auto and factor >= CONTRACTION_TARGET and weighted >= tol:
                if _next_rho(rho) > config.rho_max:
                    raise ConvergenceError('no contraction up to rho_max = {}'.format(config.rho_max), factors, rho)
                rho = _next_rho(rho)
                logger.warning('Contraction factor {:.3g}, raising rho to {:g}'.format(factor, rho))
                weighted = holder_norm(diff, beta, rho)
        current = updated
        max_norm = max(max_norm, holder_norm(SampledPath(0.0, config.grid_step, current), beta, rho))
        if weighted < tol and np.max(np.abs(diff.values)) < tol:
            logger.debug('Picard converged after {} iterations (rho = {:g})'.format(iteration, rho))
            return MildSolution(SampledPath(0.0, config.grid_step, current), iteration, tuple(factors), weighted,
                                radius, rho, max_norm, config.backend)
        previous, previous_norm = diff, weighted
    raise ConvergenceError('no convergence within {} iterations'.format(config.picard_max_iter), factors, rho)


def euler_solve(x, noise, model, config):
    """u_{k+1} = S(dt) (u_k + dt f(u_k) + h(u_k) (omega(t_{k+1}) - omega(t_k)))"""
    x = np.asarray(x, dtype=float)
    increments = np.diff(_noise_segment(noise, model, config).values, axis=0)
    family, dt = model.family, config.grid_step
    values = np.empty((config.n_steps + 1, model.window))
    values[0] = x
    for k in range(config.n_steps):
        u = values[k]
        values[k + 1] = semigroup_apply(model, dt, u + dt * family.f(u) + family.h(u) * increments[k])
    return SampledPath(0.0, dt, values)


def euler_refinement(x, noise, model, config, factors=(8, 4)):
    """
    Distance of Euler solutions on the coarser grids dt * factor to the Picard solution on dt,
    compared at the common grid times.
    """
    reference = picard_solve(x, noise, model, config).path.values
    errors = []
    for factor in factors:
        coarse = config.model_copy(update={'grid_step': config.grid_step * factor})
        approx = euler_solve(x, noise.subsample(factor), model, coarse).values
        errors.append(float(np.max(np.abs(approx - reference[::factor]))))
    return errors


def _flow(x, noise, model, config, t):
    if t == 0:
        return np.asarray(x, dtype=float)
    return picard_solve(x, noise, model, config.with_horizon(t)).final


def verify_cocycle(x, noise, model, config, t, tau, tol=1e-2):
    """
    phi(t + tau, omega, x) against phi(t, theta_tau omega, phi(tau, omega, x)), from independent solves.
    :raises OutOfHorizonError: the noise does not cover [0, t + tau]
    """
    if t < 0 or tau < 0:
        raise ValueError('t and tau must be nonnegative')
    for value in (t, tau):
        ratio = value / config.grid_step
        if abs(ratio - round(ratio)) > 1e-9 * max(ratio, 1.0):
            raise ValueError('t and tau must be multiples of the grid step')
    if not noise.covers(0.0, t + tau):
        raise OutOfHorizonError('noise does not cover [0, {}]'.format(t + tau))
    whole = _flow(x, noise, model, config, t + tau)
    middle = _flow(x, noise, model, config, tau)
    composed = _flow(middle, wiener_shift(noise, tau, window=(0.0, t)), model, config, t)
    scale = max(float(np.linalg.norm(whole)), np.finfo(float).tiny)
    discrepancy = float(np.linalg.norm(whole - composed)) / scale if np.any(whole) else \
        float(np.linalg.norm(composed))
    return VerificationReport('cocycle', {'relative_discrepancy': discrepancy},
                              {'relative_discrepancy': int(discrepancy > tol)})


def verify_convolution_bounds(u, noise, model, config, rho_ladder=(0.0, 1.0, 10.0, 50.0)):
    """
    Ratio q(rho) = ||int_0^. S(. - r) h(u(r)) d omega(r)||_{beta,rho} / (|||omega|||_{beta'} ||h(u)||_{beta,rho})
    along a rho ladder; q at the last rung must be below q(0). Also records q / k(rho) and
    q(0) / (1 + ||A_lambda||), the constants implied by the weighted and the unweighted bounds.
    """
    _check_iterate(u, config, model)
    holder = config.holder
    segment = _noise_segment(noise, model, config)
    increments = np.diff(segment.values, axis=0)
    convolution = SampledPath(0.0, config.grid_step,
                              _stochastic_convolution(u.values, increments, model, config, config.backend))
    h_path = SampledPath(0.0, config.grid_step, model.family.h(u.values))
    semi = holder_seminorm_weighted(segment, holder.beta_prime)
    measurements, skipped, ratios = {}, 0, []
    for rho in rho_ladder:
        lhs = holder_norm(convolution, holder.beta, rho)
        denominator = semi * holder_norm(h_path, holder.beta, rho)
        measurements['lhs_rho={:g}'.format(rho)] = lhs
        if denominator == 0.0:
            skipped += 1
            continue
        ratio = lhs / denominator
        ratios.append(ratio)
        measurements['ratio_rho={:g}'.format(rho)] = ratio
        measurements['constant_rho={:g}'.format(rho)] = ratio / k_rho(
            rho, -holder.alpha, holder.alpha + holder.beta_prime - holder.beta - 1.0, config.T)
    violations = {}
    if len(ratios) == len(rho_ladder) and ratios[0] > 0:
        measurements['implied_c'] = ratios[0] / (1.0 + operator_norm_A_lambda(model))
        violations['ratio_rho={:g}'.format(rho_ladder[-1])] = int(not ratios[-1] < ratios[0])
    return VerificationReport('convolution_bounds', measurements, violations, skipped)


def drift_constant(rho, beta, T, model):
    """k~(rho) = 1/rho + c_beta / rho^(1-beta) + T^(1-beta) ||A_lambda|| / rho"""
    if not rho > 0:
        raise ValueError('rho must be positive')
    return 1.0 / rho + holder_constant_c_beta(beta) / rho ** (1.0 - beta) \
        + T ** (1.0 - beta) * operator_norm_A_lambda(model) / rho


def verify_drift_bound(u, model, config, rho_ladder=(1.0, 10.0, 100.0)):
    """||int_0^. S(. - r) f(u(r)) dr||_{beta,rho} <= k~(rho) ||f(u)||_{inf,rho} on the left-point rule"""
    _check_iterate(u, config, model)
    beta = config.holder.beta
    f_values = model.family.f(u.values)
    drift = SampledPath(0.0, config.grid_step,
                        _modal_convolution(model, config.grid_step, config.grid_step * f_values[:-1]))
    f_path = SampledPath(0.0, config.grid_step, f_values)
    measurements, violations = {}, {}
    for rho in rho_ladder:
        lhs = holder_norm(drift, beta, rho)
        rhs = drift_constant(rho, beta, config.T, model) * sup_norm_weighted(f_path, rho)
        key = 'rho={:g}'.format(rho)
        measurements[key] = lhs / rhs if rhs > 0 else 0.0
        violations[key] = int(not within(lhs, rhs))
    return VerificationReport('drift_bound', measurements, violations)


def verify_uniqueness(x, noise, model, config):
    """Picard runs from S(.)x and from the constant path x reach the same fixed point within 2 picard_tol."""
    first = picard_solve(x, noise, model, config)
    constant = SampledPath(0.0, config.grid_step, np.tile(np.asarray(x, dtype=float), (config.n_steps + 1, 1)))
    second = picard_solve(x, noise, model, config, initial=constant)
    rho = max(first.rho, second.rho)
    distance = holder_norm(first.path - second.path, config.holder.beta, rho)
    return VerificationReport('uniqueness', {'distance': distance},
                              {'distance': int(distance > 2.0 * config.picard_tol)})


def _pad_columns(values, window, offset):
    padded = np.zeros(values.shape[:-1] + (window,))
    padded[..., offset:offset + values.shape[-1]] = values
    return padded


def truncation_sensitivity(x, noise, model, config, tol=1e-6):
    """
    Solve on the window and on the doubled window, with initial data and noise embedded in the centre,
    and compare on the original nodes.
    """
    window = model.window
    offset = window // 2
    wide = LatticeModel(model.nu, model.lam, 2 * window, model.boundary, model.family)
    sigma = _pad_columns(np.asarray(noise.config.sigma, dtype=float), 2 * window, offset)
    wide_noise = NoisePath(noise.config.model_copy(update={'sigma': tuple(sigma)}),
                           _pad_columns(noise.samples, 2 * window, offset), noise.origin_index, noise.step)
    narrow = picard_solve(x, noise, model, config).path.values
    broad = picard_solve(_pad_columns(np.asarray(x, dtype=float), 2 * window, offset), wide_noise, wide,
                         config).path.values
    difference = float(np.max(np.abs(broad[:, offset:offset + window] - narrow)))
    return VerificationReport('truncation_sensitivity', {'max_difference': difference},
                              {'max_difference': int(difference > tol)})


def solution_norms(solution, holder, rho=None):
    """(||u||_{beta,rho}, ||u||_{inf,rho}) of a MildSolution, rho defaulting to the one it converged with."""
    rho = solution.rho if rho is None else rho
    return holder_norm(solution.path, holder.beta, rho), sup_norm_weighted(solution.path, rho)


def write_solution_csv(filename, solution, comments=()):
    return write_path_csv(filename, solution.path.times, solution.path.values, comments)

