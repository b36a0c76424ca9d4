# -*- coding: utf-8 -*-
"""
Pathwise integrals int_s^t Z d omega for Hoelder integrands and integrators with beta + beta' > 1.

Two backends are provided. ``integral_young_sums`` is the left-point Riemann-Stieltjes sum over the grid.
``integral_fractional`` evaluates the Weyl-derivative formula

    int_s^t Z d omega = int_s^t D^alpha_{s+} Z[r] D^{1-alpha}_{t-} omega_{t-}[r] dr

on the piecewise-linear interpolants of the grid data. The inner singular integrals of the two Weyl
derivatives are then available in closed form segment by segment, so each derivative is a linear map of
the nodal values (product integration). The outer integral uses Gauss-Legendre nodes per grid cell and
Gauss-Jacobi nodes in the two end cells, where the integrand carries (r - s)^-alpha and (t - r)^alpha.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import special

from .fbm_noise import NoisePath, wiener_shift
from .holder_spaces import GRID_TOL, SampledPath, holder_norm, holder_seminorm_weighted, k_rho
from .utils import VerificationReport, within

logger = logging.getLogger(__name__)

QUAD_NODES = 8
CHUNK = 256
SUMS_TOL = 1e-10
FRACTIONAL_TOL = 1e-4
BACKEND_TOL = 1e-3


@dataclass(frozen=True)
class OperatorPath:
    """
    Grid-sampled operator-valued integrand.
    values has shape (time, N) for node-diagonal operators and (time, N, N) otherwise.
    """
    t_start: float
    step: float
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim not in (2, 3) or (values.ndim == 3 and values.shape[1] != values.shape[2]):
            raise ValueError('operator path values must have shape (time, N) or (time, N, N)')
        if values.shape[0] < 2:
            raise ValueError('an operator path needs at least 2 grid points')
        if not np.all(np.isfinite(values)):
            raise ValueError('operator path contains non-finite entries')
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @classmethod
    def identity(cls, t_start, step, n_points, window):
        return cls(t_start, step, np.ones((n_points, window)))

    @classmethod
    def diagonal(cls, path):
        """Node-diagonal operator path with the entries of a SampledPath."""
        return cls(path.t_start, path.step, path.values)

    @property
    def is_diagonal(self):
        return self.values.ndim == 2

    @property
    def window(self):
        return self.values.shape[1]

    @property
    def n_points(self):
        return self.values.shape[0]

    def as_sampled(self):
        """Entries as a SampledPath (diagonal paths only)."""
        if not self.is_diagonal:
            raise ValueError('only node-diagonal operator paths have a vector form')
        return SampledPath(self.t_start, self.step, self.values)

    def restrict(self, t0, t1):
        i0 = _grid_index(self.t_start, self.step, self.n_points, t0)
        i1 = _grid_index(self.t_start, self.step, self.n_points, t1)
        return OperatorPath(self.t_start + i0 * self.step, self.step, self.values[i0:i1 + 1])

    def shifted(self, t_start):
        return OperatorPath(t_start, self.step, self.values)

    def __add__(self, other):
        if self.values.shape != other.values.shape:
            raise ValueError('operator paths live on different grids')
        return OperatorPath(self.t_start, self.step, self.values + other.values)

    def __mul__(self, factor):
        return OperatorPath(self.t_start, self.step, self.values * float(factor))

    __rmul__ = __mul__


def _grid_index(t_start, step, n_points, t):
    position = (t - t_start) / step
    index = int(round(position))
    if abs(position - index) > GRID_TOL * max(1.0, abs(position)) or not 0 <= index < n_points:
        raise ValueError('time {} is not a grid point of the path'.format(t))
    return index


def _segment(omega, s, t):
    if isinstance(omega, NoisePath):
        return omega.segment(s, t)
    return omega.restrict(s, t)


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise ValueError('alpha must lie in (0,1)')


def _check_point(s, t, r):
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if not s < t or np.any(r <= s) or np.any(r >= t):
        raise ValueError('evaluation points must lie in (s, t) = ({}, {})'.format(s, t))
    return r


def _interpolate(t_start, step, values, points):
    """Linear interpolation of grid values at arbitrary points; trailing value axes are kept."""
    position = (np.asarray(points, dtype=float) - t_start) / step
    index = np.clip(np.floor(position).astype(int), 0, values.shape[0] - 2)
    frac = (position - index).reshape((-1,) + (1,) * (values.ndim - 1))
    return (1.0 - frac) * values[index] + frac * values[index + 1]


def _hat_weights(r, q):
    """Interpolation weights (C, K) of the nodes q at the points r."""
    index = np.clip(np.searchsorted(q, r, side='right') - 1, 0, q.size - 2)
    frac = (r - q[index]) / (q[index + 1] - q[index])
    weights = np.zeros((r.size, q.size))
    rows = np.arange(r.size)
    weights[rows, index] += 1.0 - frac
    weights[rows, index + 1] += frac
    return weights


def _slope_weights(coeff, h):
    # sum_k coeff_k m_k with m_k = (f_{k+1} - f_k) / h_k, as weights on the nodal values
    weights = np.zeros((coeff.shape[0], coeff.shape[1] + 1))
    weights[:, :-1] -= coeff / h
    weights[:, 1:] += coeff / h
    return weights


def _plus_weights(r, q, s, alpha):
    """Rows W with D^alpha_{s+} f[r] = W @ f(q) for the interpolant of f on the nodes q."""
    h = np.diff(q)
    y_hi = r[:, None] - q[None, :-1]
    y_lo = r[:, None] - q[None, 1:]
    started = y_hi > 0
    full = y_lo > 0
    partial = started & ~full
    hi = np.where(started, y_hi, 1.0)
    lo = np.where(full, y_lo, 1.0)
    near = np.where(full, (lo ** -alpha - hi ** -alpha) / alpha, 0.0)
    far = np.where(full, (hi ** (1 - alpha) - lo ** (1 - alpha)) / (1 - alpha),
                   np.where(partial, hi ** (1 - alpha) / (1 - alpha), 0.0))
    slope = np.where(started, far - near * y_hi, 0.0)
    hat = _hat_weights(r, q)
    inner = near.sum(axis=1)[:, None] * hat + _slope_weights(slope, h)
    inner[:, :-1] -= near
    return ((r - s) ** -alpha)[:, None] * hat / special.gamma(1 - alpha) \
        + alpha * inner / special.gamma(1 - alpha)


def _minus_weights(r, q, t, alpha):
    """
    Rows W with W @ omega(q) = (-1)^alpha D^{1-alpha}_{t-} omega_{t-}[r] in the real convention,
    so that the product with D^alpha_{s+} Z integrates to int Z d omega.
    """
    h = np.diff(q)
    y_lo = q[None, :-1] - r[:, None]
    y_hi = q[None, 1:] - r[:, None]
    ended = y_hi > 0
    full = y_lo > 0
    partial = ended & ~full
    hi = np.where(ended, y_hi, 1.0)
    lo = np.where(full, y_lo, 1.0)
    near = np.where(full, (lo ** (alpha - 1) - hi ** (alpha - 1)) / (1 - alpha), 0.0)
    far = np.where(full, (hi ** alpha - lo ** alpha) / alpha, np.where(partial, hi ** alpha / alpha, 0.0))
    slope = np.where(ended, near * np.where(full, y_lo, 0.0) - far, 0.0)
    hat = _hat_weights(r, q)
    inner = near.sum(axis=1)[:, None] * hat + _slope_weights(slope, h)
    inner[:, :-1] -= near
    boundary = hat.copy()
    boundary[:, -1] -= 1.0
    bracket = ((t - r) ** (alpha - 1))[:, None] * boundary + (1 - alpha) * inner
    return -bracket / special.gamma(alpha)


def _quadrature(q, alpha, nodes):
    """Composite rule over the cells of q; the end cells absorb (r - s)^-alpha and (t - r)^alpha."""
    legendre = special.roots_legendre(nodes)
    points, weights = [], []
    last = q.size - 2
    for k in range(q.size - 1):
        a_exp = alpha if k == last else 0.0
        b_exp = -alpha if k == 0 else 0.0
        if a_exp == 0.0 and b_exp == 0.0:
            x, w = legendre
            scale = np.ones_like(x)
        else:
            x, w = special.roots_jacobi(nodes, a_exp, b_exp)
            scale = (1.0 - x) ** -a_exp * (1.0 + x) ** -b_exp
        half = 0.5 * (q[k + 1] - q[k])
        points.append(q[k] + (x + 1.0) * half)
        weights.append(w * half * scale)
    return np.concatenate(points), np.concatenate(weights)


def weyl_derivative_plus(Z, alpha, s, t, r, node=0):
    """
    D^alpha_{s+} Z[r] = (Z(r) / (r - s)^alpha + alpha int_s^r (Z(r) - Z(q)) / (r - q)^(1 + alpha) dq) / Gamma(1 - alpha)
    :param Z: SampledPath (the given node is used) covering [s, t]
    :param r: point or array of points in (s, t)
    """
    _check_alpha(alpha)
    r = _check_point(s, t, r)
    segment = Z.restrict(s, t)
    q = segment.times
    value = _plus_weights(r, q, s, alpha) @ segment.values[:, node]
    return float(value[0]) if value.size == 1 else value


def weyl_derivative_minus(omega, alpha, s, t, r, node=0):
    """
    Real-valued (-1)^alpha D^{1-alpha}_{t-} omega_{t-}[r] with omega_{t-}(r) = omega(r) - omega(t); the phase of the
    derivative and the phase in front of the integral are combined here.
    :param omega: NoisePath or SampledPath covering [s, t]
    """
    _check_alpha(alpha)
    r = _check_point(s, t, r)
    segment = _segment(omega, s, t)
    q = segment.times
    value = _minus_weights(r, q, t, alpha) @ segment.values[:, node]
    return float(value[0]) if value.size == 1 else value


def integral_fractional(Z, omega, s, t, alpha, holder=None, quad_nodes=QUAD_NODES):
    """
    int_s^t Z d omega by the fractional formula, one entry per node.
    :param Z: OperatorPath on the grid of omega
    :param omega: NoisePath or SampledPath
    :param alpha: fractional order; with holder given it must lie in (1 - beta', beta)
    :param holder: HolderConfig used for the admissibility check
    :return: vector of length N
    """
    _check_alpha(alpha)
    if holder is not None and not 1.0 - holder.beta_prime < alpha < holder.beta:
        raise ValueError('alpha must lie in (1-beta_prime, beta) = ({:.4g}, {:.4g})'.format(
            1.0 - holder.beta_prime, holder.beta))
    if not s < t:
        raise ValueError('integration bounds must satisfy s < t')
    segment = _segment(omega, s, t)
    operator = Z.restrict(s, t)
    if operator.n_points != segment.n_points or abs(operator.step - segment.step) > GRID_TOL * segment.step:
        raise ValueError('integrand and integrator live on different grids')
    q = segment.times
    r, w = _quadrature(q, alpha, quad_nodes)
    result = np.zeros(segment.window)
    for start in range(0, r.size, CHUNK):
        block = slice(start, start + CHUNK)
        d_plus = np.tensordot(_plus_weights(r[block], q, s, alpha), operator.values, axes=(1, 0))
        d_minus = _minus_weights(r[block], q, t, alpha) @ segment.values
        if operator.is_diagonal:
            result += np.sum(w[block, None] * d_plus * d_minus, axis=0)
        else:
            result += np.einsum('c,cji,ci->j', w[block], d_plus, d_minus)
    return result


def integral_young_sums(Z, omega, s, t):
    """Left-point sum sum_k Z(t_k) (omega(t_{k+1}) - omega(t_k)) over the grid points of [s, t]."""
    if not s < t:
        raise ValueError('integration bounds must satisfy s < t')
    segment = _segment(omega, s, t)
    operator = Z.restrict(s, t)
    if operator.n_points != segment.n_points:
        raise ValueError('integrand and integrator live on different grids')
    increments = np.diff(segment.values, axis=0)
    if operator.is_diagonal:
        return np.sum(operator.values[:-1] * increments, axis=0)
    return np.einsum('kji,ki->j', operator.values[:-1], increments)


def _integral(backend, Z, omega, s, t, alpha):
    if backend == 'sums':
        return integral_young_sums(Z, omega, s, t)
    return integral_fractional(Z, omega, s, t, alpha)


def verify_integral_calculus(Z, Z2, omega, omega2, s, tau, t, alpha):
    """
    Residuals, relative to 1 + |integral|, of
      linearity in Z, linearity in omega, additivity at tau, and
      int_s^t Z d omega = int_{s-tau}^{t-tau} Z(. + tau) d theta_tau omega,
    for both backends. omega must be a NoisePath so that it can be shifted.
    """
    if not s <= tau <= t:
        raise ValueError('tau must lie in [s, t]')
    omega_sum = NoisePath(omega.config, omega.samples + omega2.samples, omega.origin_index, omega.step)
    shifted = wiener_shift(omega, tau, window=(s - tau, t - tau))
    measurements, violations = {}, {}
    for backend, tol in (('sums', SUMS_TOL), ('fractional', FRACTIONAL_TOL)):
        base = _integral(backend, Z, omega, s, t, alpha)
        scale = 1.0 + np.max(np.abs(base))
        residuals = {
            'linearity_Z': _integral(backend, Z + Z2, omega, s, t, alpha) - base
            - _integral(backend, Z2, omega, s, t, alpha),
            'linearity_omega': _integral(backend, Z, omega_sum, s, t, alpha) - base
            - _integral(backend, Z, omega2, s, t, alpha),
            'shift': _integral(backend, Z.shifted(Z.t_start - tau), shifted, s - tau, t - tau, alpha) - base,
        }
        if s < tau < t:
            residuals['additivity'] = base - _integral(backend, Z, omega, s, tau, alpha) \
                - _integral(backend, Z, omega, tau, t, alpha)
        for name, residual in residuals.items():
            key = '{}_{}'.format(backend, name)
            measurements[key] = float(np.max(np.abs(residual)) / scale)
            violations[key] = int(measurements[key] > tol)
    return VerificationReport('integral_calculus', measurements, violations)


def verify_backend_agreement(Z, omega, s, t, holder, tol=BACKEND_TOL):
    """
    |fractional - sums| / (1 + |sums|) per node, gated at tol.
    The fractional backend integrates the interpolants, i.e. the trapezoid sum, so the gap to the
    left-point sums is the correction 1/2 sum dZ d omega plus quadrature error; both are reported.
    """
    sums = integral_young_sums(Z, omega, s, t)
    fractional = integral_fractional(Z, omega, s, t, holder.alpha, holder=holder)
    segment = _segment(omega, s, t)
    operator = Z.restrict(s, t)
    d_omega = np.diff(segment.values, axis=0)
    if operator.is_diagonal:
        correction = 0.5 * np.sum(np.diff(operator.values, axis=0) * d_omega, axis=0)
    else:
        correction = 0.5 * np.einsum('kji,ki->j', np.diff(operator.values, axis=0), d_omega)
    scale = 1.0 + np.abs(sums)
    gap = float(np.max(np.abs(fractional - sums) / scale))
    quadrature = float(np.max(np.abs(fractional - sums - correction) / scale))
    return VerificationReport('backend_agreement',
                              {'relative_difference': gap, 'trapezoid_correction': float(np.max(
                                  np.abs(correction) / scale)), 'quadrature_residual': quadrature},
                              {'relative_difference': int(not gap <= tol)})


def _random_pairs(start, end, step, n_pairs, seed):
    rng = np.random.default_rng(seed)
    count = int(round((end - start) / step))
    pairs = set()
    while len(pairs) < min(n_pairs, count * (count + 1) // 2):
        i, j = sorted(rng.integers(0, count + 1, size=2))
        if i < j:
            pairs.add((start + i * step, start + j * step))
    return sorted(pairs)


def verify_young_bound(Z, omega, s, t, holder, n_pairs=200, seed=0, backend='sums', pairs=None, nodes=None):
    """
    Empirical constant of |int Z d omega| <= C (1 + (t-s)^beta) (t-s)^beta' ||Z||_beta |||omega|||_beta'
    as the largest ratio over random grid pairs inside [s, t], node by node (all nodes unless given).
    """
    beta, beta_prime = holder.beta, holder.beta_prime
    pairs = pairs if pairs is not None else _random_pairs(s, t, _segment(omega, s, t).step, n_pairs, seed)
    best, skipped, non_finite = 0.0, 0, 0
    for a, b in pairs:
        integral = _integral(backend, Z, omega, a, b, holder.alpha)
        segment = _segment(omega, a, b)
        entries = Z.restrict(a, b)
        for node in (range(segment.window) if nodes is None else nodes):
            z_path = SampledPath(a, segment.step, entries.values[:, node] if entries.is_diagonal
                                 else entries.values[:, node, node])
            denominator = (1 + (b - a) ** beta) * (b - a) ** beta_prime * holder_norm(z_path, beta) \
                * holder_seminorm_weighted(segment.node(node), beta_prime)
            if denominator == 0.0:
                skipped += 1
                continue
            ratio = abs(integral[node]) / denominator
            if not np.isfinite(ratio):
                non_finite += 1
                continue
            best = max(best, ratio)
    if skipped:
        logger.warning('Skipped {} degenerate cases in the Young bound'.format(skipped))
    return VerificationReport('young_bound', {'empirical_C': best, 'pairs': float(len(pairs))},
                              {'empirical_C': non_finite}, skipped)


def verify_young_refinement(Z, omega, s, t, holder, factor=4, tol=0.2, n_pairs=200, seed=0, backend='sums',
                            nodes=None):
    """
    The empirical Young constant on the grid of omega and on every factor-th grid point, over the same
    random pairs of the coarse grid. Fails when C_fine / C_coarse leaves [1 - tol, 1 + tol].
    """
    coarse_omega = omega.subsample(factor)
    if not coarse_omega.covers(s, t):
        raise ValueError('[{}, {}] is not covered by the subsampled noise'.format(s, t))
    operator = Z.restrict(s, t)
    if (operator.n_points - 1) % factor:
        raise ValueError('[{}, {}] must hold a whole number of coarse steps'.format(s, t))
    coarse_Z = OperatorPath(operator.t_start, operator.step * factor, operator.values[::factor])
    pairs = _random_pairs(s, t, coarse_omega.step, n_pairs, seed)
    fine = verify_young_bound(Z, omega, s, t, holder, backend=backend, pairs=pairs, nodes=nodes)
    coarse = verify_young_bound(coarse_Z, coarse_omega, s, t, holder, backend=backend, pairs=pairs, nodes=nodes)
    c_fine, c_coarse = fine.measurements['empirical_C'], coarse.measurements['empirical_C']
    if c_coarse > 0.0:
        ratio = c_fine / c_coarse
    else:
        ratio = 1.0 if c_fine == 0.0 else np.inf
    logger.debug('Young constant {} on step {} and {} on step {}'.format(c_fine, omega.step, c_coarse,
                                                                      coarse_omega.step))
    return VerificationReport('young_refinement',
                              {'C_fine': c_fine, 'C_coarse': c_coarse, 'ratio': ratio,
                               'step_fine': omega.step, 'step_coarse': coarse_omega.step},
                              {'ratio': int(not abs(ratio - 1.0) <= tol),
                               'C_fine': fine.violations['empirical_C'],
                               'C_coarse': coarse.violations['empirical_C']},
                              fine.skipped + coarse.skipped)


def verify_weighted_estimate(Z, omega, s, t, holder, rho_ladder=(0.0, 1.0, 10.0, 100.0), n_pairs=100, seed=0,
                             backend='sums'):
    """
    Along a rho ladder, the weighted left side
        L(rho) = max over pairs of e^{-rho b} ||int_a^b Z d omega||
            / (||Z||_{beta,rho,a,b} |||omega|||_{beta',a,b} (b-a)^beta)
    must not increase. The ratio L(rho) / (c k(rho)) with c = L(0) / k(0) is recorded alongside,
    k taken with a = -alpha, b = alpha + beta' - beta - 1 and T = t - s.
    """
    beta, beta_prime, alpha = holder.beta, holder.beta_prime, holder.alpha
    pairs = _random_pairs(s, t, _segment(omega, s, t).step, n_pairs, seed)
    cache = []
    for a, b in pairs:
        integral = np.linalg.norm(_integral(backend, Z, omega, a, b, alpha))
        semi = holder_seminorm_weighted(_segment(omega, a, b), beta_prime)
        cache.append((a, b, integral, semi, Z.restrict(a, b)))
    left = []
    for rho in rho_ladder:
        best = 0.0
        for a, b, integral, semi, entries in cache:
            z_norm = holder_norm(entries.as_sampled() if entries.is_diagonal
                                 else SampledPath(a, entries.step, np.diagonal(entries.values, axis1=1, axis2=2)),
                                 beta, rho)
            if z_norm * semi == 0.0:
                continue
            best = max(best, np.exp(-rho * b) * integral / (z_norm * semi * (b - a) ** beta))
        left.append(best)
    ks = [k_rho(rho, -alpha, alpha + beta_prime - beta - 1.0, t - s) for rho in rho_ladder]
    constant = left[0] / ks[0] if ks[0] > 0 else 0.0
    measurements, violations = {}, {}
    for i, rho in enumerate(rho_ladder):
        measurements['left_rho={:g}'.format(rho)] = left[i]
        measurements['ratio_rho={:g}'.format(rho)] = left[i] / (constant * ks[i]) if constant > 0 else 0.0
        if i:
            violations['left_rho={:g}'.format(rho)] = int(not within(left[i], left[i - 1], rtol=1e-9))
    return VerificationReport('weighted_estimate', measurements, violations)


def piecewise_linear_interpolant(path, factor):
    """Interpolate a SampledPath from every factor-th grid point back onto its full grid."""
    coarse_times = path.times[::factor]
    coarse_values = path.values[::factor]
    if coarse_times[-1] < path.t_end - GRID_TOL * path.step:
        raise ValueError('the coarse mesh must end on the last grid point')
    values = _interpolate(coarse_times[0], path.step * factor, coarse_values, path.times)
    return SampledPath(path.t_start, path.step, values)


def verify_integrator_continuity(Z, omega, s, t, holder, factors=(16, 8, 4, 2), backend='sums'):
    """
    Integrators omega_n interpolating omega on coarser meshes approach omega in the beta' seminorm,
    and int Z d omega_n approaches int Z d omega.
    """
    segment = _segment(omega, s, t)
    exact = _integral(backend, Z, segment, s, t, holder.alpha)
    distances, errors = [], []
    for factor in factors:
        approx = piecewise_linear_interpolant(segment, factor)
        distances.append(holder_seminorm_weighted(approx - segment, holder.beta_prime))
        errors.append(float(np.max(np.abs(_integral(backend, Z, approx, s, t, holder.alpha) - exact))))
    measurements = {'distance_coarsest': distances[0], 'distance_finest': distances[-1],
                    'error_coarsest': errors[0], 'error_finest': errors[-1]}
    violations = {'distance_finest': int(distances[-1] >= distances[0]),
                  'error_finest': int(errors[-1] >= errors[0])}
    return VerificationReport('integrator_continuity', measurements, violations)
