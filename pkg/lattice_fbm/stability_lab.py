# -*- coding: utf-8 -*-
"""
Exponential stability of the trivial solution via a cut-off and unit-interval concatenation.

The nonlinearities are truncated by chi_R(u) = R chi(u / R) with a radius R_hat(theta_n omega)
that shrinks with the roughness of the noise on [n, n + 1]. The truncated problem is solved
interval by interval, starting each interval from the end value of the previous one, and the
interval norms are compared with the discrete Gronwall envelope.
"""
import logging
from dataclasses import dataclass, replace
from functools import lru_cache, partial
from typing import Callable, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy import stats

from .fbm_noise import wiener_shift
from .holder_spaces import SampledPath, holder_norm, holder_seminorm_weighted
from .lattice_ops import operator_norm_A_lambda
from .mild_solver import picard_solve
from .utils import VerificationReport, within, write_csv
from .young_integral import OperatorPath, verify_young_bound

logger = logging.getLogger(__name__)

PROFILE_SAMPLES = 10 ** 6
BISECTION_TOL = 1e-12
# Largest radius for which sup_{||z|| <= r} ||(1 - cos z_i)_i|| is attained on a single coordinate
CLOSED_FORM_RADIUS = 2.0


def _smoothstep(x):
    return x ** 3 * (10.0 - 15.0 * x + 6.0 * x ** 2)


def _smoothstep_d1(x):
    return 30.0 * x ** 2 * (1.0 - x) ** 2


def _smoothstep_d2(x):
    return 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x)


@dataclass(frozen=True)
class CutoffFunction:
    """
    chi(u) = psi(||u||^2) u with psi = 1 on [0, inner] and 0 on [outer, inf),
    joined by the quintic smoothstep, so chi is C^2, the identity on ||u|| <= 1/2 and 0 on ||u|| >= 1.
    """
    inner: float = 0.25
    outer: float = 1.0

    def _x(self, q):
        return np.clip((np.asarray(q, dtype=float) - self.inner) / (self.outer - self.inner), 0.0, 1.0)

    def psi(self, q):
        q = np.asarray(q, dtype=float)
        return np.where(q <= self.inner, 1.0, np.where(q >= self.outer, 0.0, 1.0 - _smoothstep(self._x(q))))

    def dpsi(self, q):
        return -_smoothstep_d1(self._x(q)) / (self.outer - self.inner)

    def d2psi(self, q):
        return -_smoothstep_d2(self._x(q)) / (self.outer - self.inner) ** 2

    def radial_first(self, r):
        """Operator norm of D chi at a point of norm r: max(|psi|, |psi + 2 q psi'|), q = r^2."""
        q = np.asarray(r, dtype=float) ** 2
        return np.maximum(np.abs(self.psi(q)), np.abs(self.psi(q) + 2.0 * q * self.dpsi(q)))

    def radial_second(self, r):
        """Upper bound 6 |psi'| r + 4 |psi''| r^3 of the norm of D^2 chi at a point of norm r."""
        r = np.asarray(r, dtype=float)
        q = r ** 2
        return 6.0 * np.abs(self.dpsi(q)) * r + 4.0 * np.abs(self.d2psi(q)) * r ** 3


def cutoff_apply(chi, u, r_hat, delta=None):
    """
    R_hat chi(u / R_hat), along the last axis
    :param delta: upper limit for r_hat when given
    """
    if not r_hat > 0:
        raise ValueError('r_hat must be positive')
    if delta is not None and r_hat > delta:
        raise ValueError('r_hat must not exceed delta = {}'.format(delta))
    u = np.asarray(u, dtype=float)
    q = (np.linalg.norm(u, axis=-1, keepdims=True) / r_hat) ** 2
    return chi.psi(q) * u


@lru_cache(maxsize=None)
def cutoff_derivative_bounds(chi, samples=PROFILE_SAMPLES):
    """
    (L_Dchi, L_D2chi) from the radial profile sampled on [0, 1]; D chi vanishes beyond norm 1.
    For chi_R the first bound is unchanged and the second scales like 1 / R, see scaled_second_bound.
    """
    r = np.linspace(0.0, 1.0, samples)
    first = float(max(1.0, np.max(chi.radial_first(r))))
    second = float(np.max(chi.radial_second(r)))
    logger.debug('Cut-off bounds from {} samples: L_Dchi={:.6g}, L_D2chi={:.6g}'.format(samples, first, second))
    return first, second


def scaled_second_bound(chi, r_hat, norms):
    """Second-derivative bound of chi_R at points of the given norms: radial_second(||u|| / R) / R."""
    if not r_hat > 0:
        raise ValueError('r_hat must be positive')
    return chi.radial_second(np.asarray(norms, dtype=float) / r_hat) / r_hat


class StabilityConfig(BaseModel):
    """
    eps_hat, target rate mu, number of unit intervals, the aggregated constant C (derived when omitted),
    the scale of the initial value inside the admissible neighbourhood and the slack eps.
    """
    model_config = ConfigDict(frozen=True, extra='forbid')

    eps_hat: float = 0.2
    mu: float = 0.5
    n_max: int = 20
    C: Optional[float] = None
    initial_scale: float = 1.0
    eps: float = 0.01

    @model_validator(mode='after')
    def _check(self):
        if not self.eps_hat > 0:
            raise ValueError('eps_hat must be positive')
        if self.n_max < 1:
            raise ValueError('n_max must be at least 1')
        if self.C is not None and not self.C > 0:
            raise ValueError('C must be positive')
        if not self.initial_scale > 0:
            raise ValueError('initial_scale must be positive')
        if not self.eps > 0:
            raise ValueError('eps must be positive')
        return self

    def check_lambda(self, lam):
        bound = 1.0 - np.exp(-lam)
        if not self.eps_hat < bound:
            raise ValueError('eps_hat must lie in (0, 1-exp(-lambda)) = (0, {:.4g})'.format(bound))
        rate = target_rate(lam, self.eps_hat)
        if not self.mu < rate:
            raise ValueError('mu must be smaller than lambda - log(1 + eps_hat exp(lambda)) = {:.4g}'.format(rate))
        return self


def target_rate(lam, eps_hat):
    """lambda - log(1 + eps_hat e^lambda)"""
    return lam - np.log1p(eps_hat * np.exp(lam))


def unit_seminorm(noise, n, holder):
    """|||theta_n omega|||_{beta',0,1}"""
    shifted = wiener_shift(noise, n, window=(0.0, 1.0))
    return holder_seminorm_weighted(shifted.segment(0.0, 1.0), holder.beta_prime)


def compute_R_omega(noise, n, eps_hat, C, holder):
    """eps_hat / (2 C (1 + |||theta_n omega|||_{beta',0,1}))"""
    if not eps_hat > 0 or not C > 0:
        raise ValueError('eps_hat and C must be positive')
    return eps_hat / (2.0 * C * (1.0 + unit_seminorm(noise, n, holder)))


def empirical_young_constant(noise, holder, n_pairs=40, seed=0):
    """Young-bound constant measured with omega as its own integrand on [0, 1], on the strongest node."""
    segment = noise.segment(0.0, 1.0)
    node = int(np.argmax(np.abs(noise.config.sigma)))
    report = verify_young_bound(OperatorPath.diagonal(segment), noise, 0.0, 1.0, holder, n_pairs=n_pairs,
                                seed=seed, nodes=[node])
    return report.measurements['empirical_C']


def stability_constant(model, chi, c_young):
    """C = max(1, c) L_Dchi (1 + ||A_lambda||) (2 + ||A_lambda||)"""
    norm = operator_norm_A_lambda(model)
    return max(1.0, c_young) * cutoff_derivative_bounds(chi)[0] * (1.0 + norm) * (2.0 + norm)


def _largest_below(profile, level, upper):
    # largest r in [0, upper] with profile(r) <= level for a nondecreasing profile
    if profile(upper) <= level:
        return upper
    low, high = 0.0, upper
    while high - low > BISECTION_TOL * max(1.0, upper):
        middle = 0.5 * (low + high)
        if profile(middle) <= level:
            low = middle
        else:
            high = middle
    return low


def compute_R_hat(R, family):
    """max{r : sup_{||v|| <= r} (||Df(v)|| + ||Dh(v)||) <= R} capped at delta"""
    if not R > 0:
        raise ValueError('R must be positive')
    if family.kind != 'stability':
        raise ValueError('R_hat needs a family with Df(0) = Dh(0) = 0')
    upper = family.delta if np.isfinite(family.delta) else np.pi
    return _largest_below(family.profile, R, upper)


def _truncated(chi, r_hat, func, u):
    return func(cutoff_apply(chi, u, r_hat))


def truncated_family(family, chi, r_hat):
    """f o chi_R and h o chi_R; the derivative fields keep describing the untruncated maps."""
    return replace(family, f=partial(_truncated, chi, r_hat, family.f), h=partial(_truncated, chi, r_hat, family.h))


def truncated_interval_solve(x_n, noise, n, r_hat, model, config, chi=None):
    """
    Picard solve on [0, 1] of the truncated problem driven by theta_n omega.
    The Picard tolerance is taken relative to ||x_n||.
    """
    chi = chi or CutoffFunction()
    x_n = np.asarray(x_n, dtype=float)
    size = float(np.linalg.norm(x_n))
    unit = config.model_copy(update={'T': 1.0})
    if size == 0.0:
        return SampledPath(0.0, unit.grid_step, np.zeros((unit.n_steps + 1, model.window)))
    unit = unit.model_copy(update={'picard_tol': config.picard_tol * size})
    shifted = wiener_shift(noise, n, window=(0.0, 1.0))
    return picard_solve(x_n, shifted, model.with_family(truncated_family(model.family, chi, r_hat)), unit).path


def verify_truncation_bounds(path, family, chi, R, r_hat, n_random=200, seed=0):
    """
    Along a trajectory, on consecutive samples, on samples against 0 and on random sample pairs:
      ||f_R(u)|| <= R L_Dchi ||u||  and  ||h_R(u) - h_R(z)|| <= R L_Dchi ||u - z||
    """
    bound = R * cutoff_derivative_bounds(chi)[0]
    values = path.values
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, values.shape[0], size=(n_random, 2))
    first = np.concatenate([values[1:], values, values[picks[:, 0]]])
    second = np.concatenate([values[:-1], np.zeros_like(values), values[picks[:, 1]]])
    f_lhs = np.linalg.norm(family.f(cutoff_apply(chi, values, r_hat)), axis=1)
    f_rhs = bound * np.linalg.norm(values, axis=1)
    h_lhs = np.linalg.norm(family.h(cutoff_apply(chi, first, r_hat)) - family.h(cutoff_apply(chi, second, r_hat)),
                           axis=1)
    h_rhs = bound * np.linalg.norm(first - second, axis=1)
    measurements, violations = {}, {}
    for name, lhs, rhs in (('f_growth', f_lhs, f_rhs), ('h_lipschitz', h_lhs, h_rhs)):
        positive = rhs > 0
        measurements[name] = float(np.max(lhs[positive] / rhs[positive])) if np.any(positive) else 0.0
        violations[name] = int(np.sum(~within(lhs, rhs)))
    return VerificationReport('truncation_bounds', measurements, violations)


def neighborhood_radius(noise, stab, model, holder, C):
    """initial_scale min_{n < n_max} R_hat(theta_n omega) / (4 (1 + ||A_lambda||))"""
    r_hats = [compute_R_hat(compute_R_omega(noise, n, stab.eps_hat, C, holder), model.family)
              for n in range(stab.n_max)]
    return stab.initial_scale * min(r_hats) / (4.0 * (1.0 + operator_norm_A_lambda(model)))


def gronwall_bound(c, g):
    """c prod_{j<n} (1 + g_j) for n = 0, ..., len(g)"""
    g = np.asarray(g, dtype=float)
    if c < 0 or np.any(g < 0):
        raise ValueError('c and g must be nonnegative')
    return c * np.concatenate([[1.0], np.cumprod(1.0 + g)])


def gronwall_hypothesis(y, c, g):
    """Whether y_n <= c + sum_{j<n} g_j y_j holds for every n."""
    y, g = np.asarray(y, dtype=float), np.asarray(g, dtype=float)
    partial_sums = np.concatenate([[0.0], np.cumsum(g[:y.size - 1] * y[:-1])])
    return bool(np.all(within(y, c + partial_sums, rtol=1e-9)))


def lemma_l8_check(v0, mu, eps, C_eps, n):
    """v_i = v0 e^{-mu i} <= C_eps e^{-eps i} for i = 0, ..., n"""
    i = np.arange(n + 1)
    return bool(np.all(v0 * np.exp(-mu * i) <= C_eps * np.exp(-eps * i)))


def lemma_l8_crossing(v0, mu, eps, C_eps):
    """First index at which v0 e^{-mu i} exceeds C_eps e^{-eps i}, or None if it never does."""
    if v0 > C_eps:
        return 0
    if eps <= mu:
        return None
    limit = np.log(C_eps / v0) / (eps - mu)
    return int(np.floor(limit)) + 1


def _family_sup(scale, r):
    return scale * (1.0 - np.cos(r))


def _linear(kappa, r):
    return kappa * r


@dataclass(frozen=True)
class RadialMap:
    """
    A map F with F(0) = 0 described by profile(r) = sup_{||z|| <= r} ||F(z)||, kappa >= sup ||DF|| on the
    ball of the given radius.
    """
    profile: Callable
    kappa: float
    radius: float

    @classmethod
    def linear(cls, kappa, radius=1.0):
        return cls(partial(_linear, kappa), kappa, radius)

    @classmethod
    def from_family(cls, family):
        """F = (f, h) of the stability family on its delta-ball."""
        if family.kind != 'stability':
            raise ValueError('closed forms exist for the stability family only')
        if family.delta > CLOSED_FORM_RADIUS:
            raise ValueError('delta must not exceed {}'.format(CLOSED_FORM_RADIUS))
        scale = float(np.hypot(family.D_f, family.D_h))
        return cls(partial(_family_sup, scale), scale * np.sin(min(family.delta, np.pi / 2)), family.delta)


def lemma_l21_check(target, R_ladder):
    """
    For R below sup ||F|| on the ball, R_hat(R) = sup{r : sup_{||z|| <= r} ||F(z)|| <= R} satisfies
    sup_{||z|| <= R_hat} ||F(z)|| <= R and R_hat / R >= 1 / kappa.
    :param target: RadialMap or NonlinearityFamily
    """
    radial = target if isinstance(target, RadialMap) else RadialMap.from_family(target)
    ceiling = radial.profile(radial.radius)
    measurements = {'sup_over_R': 0.0, 'kappa_ratio': np.inf}
    violations = {'sup_over_R': 0, 'kappa_ratio': 0}
    skipped = 0
    for R in R_ladder:
        if not 0 < R < ceiling:
            skipped += 1
            continue
        r_hat = _largest_below(radial.profile, R, radial.radius)
        measurements['sup_over_R'] = max(measurements['sup_over_R'], radial.profile(r_hat) / R)
        measurements['kappa_ratio'] = min(measurements['kappa_ratio'], radial.kappa * r_hat / R)
        violations['sup_over_R'] += int(not within(radial.profile(r_hat), R))
        violations['kappa_ratio'] += int(not within(1.0 / radial.kappa, r_hat / R, rtol=1e-9))
    if skipped:
        logger.warning('{} radii at or above sup ||F|| = {:.4g} were skipped'.format(skipped, ceiling))
    return VerificationReport('lemma_l21', measurements, violations, skipped)


@dataclass(frozen=True)
class DecayFit:
    rate: float
    intercept: float
    r_squared: float
    insufficient: bool = False

    def certifies(self, mu):
        return not self.insufficient and self.rate >= mu


def decay_rate_fit(norms):
    """
    Least squares of log ||u^n|| against n over the nonzero norms; the rate is minus the slope.
    All-zero norms decay at rate +inf; fewer than 3 nonzero norms are insufficient.
    """
    norms = np.asarray(norms, dtype=float)
    index = np.flatnonzero(norms > 0)
    if index.size == 0:
        return DecayFit(np.inf, np.nan, np.nan)
    if index.size < 3:
        return DecayFit(np.nan, np.nan, np.nan, insufficient=True)
    fit = stats.linregress(index.astype(float), np.log(norms[index]))
    return DecayFit(-float(fit.slope), float(fit.intercept), float(fit.rvalue) ** 2)


def _log_plus(value):
    return float(np.log(value)) if value > 1.0 else 0.0


def temperedness_diagnostic(noise_factory, seeds, n_max, holder, confidence=0.95):
    """
    Finite-horizon diagnostic of log+ |||theta_n omega|||_{beta',0,1} / n -> 0.

    Per seed, log+ of the unit-interval seminorm is regressed on n = 1..n_max; the mean slope over seeds
    and its normal confidence interval are reported, and the check fails when the interval misses 0.
    :param noise_factory: seed -> NoisePath covering [0, n_max + 1]
    """
    seeds = list(seeds)
    n = np.arange(1, n_max + 1)
    slopes, statistics, errors = [], [], []
    for seed in seeds:
        noise = noise_factory(seed)
        log_plus = np.array([_log_plus(unit_seminorm(noise, k, holder)) for k in n])
        statistics.append(log_plus / n)
        fit = stats.linregress(n.astype(float), log_plus)
        slopes.append(float(fit.slope))
        errors.append(float(fit.stderr))
    slopes = np.array(slopes)
    mean = float(np.mean(slopes))
    error = float(np.std(slopes, ddof=1) / np.sqrt(len(slopes))) if len(slopes) > 1 else errors[0]
    half_width = stats.norm.ppf(0.5 + confidence / 2.0) * error + 1e-12
    measurements = {'slope': mean, 'standard_error': error, 'ci_low': mean - half_width,
                    'ci_high': mean + half_width, 'statistic_at_n_max': float(np.mean([s[-1] for s in statistics]))}
    violations = {'slope': int(not mean - half_width <= 0.0 <= mean + half_width)}
    return VerificationReport('temperedness', measurements, violations)


@dataclass(frozen=True)
class StabilityReport:
    """
    Interval diagnostics of a concatenated truncated solve.
    cutoff_active[n] is set when some sample of u^n has norm above R_hat(theta_n omega) / 2.
    """
    norms: Tuple[float, ...]
    R: Tuple[float, ...]
    R_hat: Tuple[float, ...]
    gronwall_bound: Tuple[float, ...]
    cutoff_active: Tuple[bool, ...]
    amplification: Tuple[float, ...]
    temperedness: Tuple[float, ...]
    fit: DecayFit
    C: float
    x_norm: float
    rate_bound: float
    envelope_holds: bool
    hypothesis_holds: bool
    radius_condition: bool
    certified: bool
    path: SampledPath
    consistency_error: Optional[float] = None

    @property
    def truncation_inactive(self):
        return not any(self.cutoff_active)


def concatenated_solve(x, noise, stab, model, config, chi=None, C=None, check_consistency=False):
    """
    Solve the truncated problem on [n, n + 1] for n < n_max, each interval starting from the end of the previous.

    :param C: aggregated constant; defaults to stab.C, then to one built from twice the empirical Young constant
    :param check_consistency: when no cut-off was active, compare with a direct untruncated solve on [0, n_max]
    :return: StabilityReport
    """
    chi = chi or CutoffFunction()
    holder = config.holder
    x = np.asarray(x, dtype=float)
    if C is None:
        C = stab.C if stab.C is not None else stability_constant(
            model, chi, 2.0 * empirical_young_constant(noise, holder))
    a_norm = operator_norm_A_lambda(model)
    x_norm = float(np.linalg.norm(x))
    start = x
    norms, radii, r_hats, active, tempered, pieces = [], [], [], [], [], []
    for n in range(stab.n_max):
        R = compute_R_omega(noise, n, stab.eps_hat, C, holder)
        r_hat = compute_R_hat(R, model.family)
        piece = truncated_interval_solve(start, noise, n, r_hat, model, config, chi)
        norms.append(holder_norm(piece, holder.beta))
        radii.append(R)
        r_hats.append(r_hat)
        active.append(bool(np.any(np.linalg.norm(piece.values, axis=1) > r_hat / 2.0)))
        if n:
            tempered.append(_log_plus(unit_seminorm(noise, n, holder)) / n)
        pieces.append(piece.values if n == 0 else piece.values[1:])
        start = piece.values[-1]
    if any(active):
        logger.warning('Cut-off active on intervals {}'.format([n for n, flag in enumerate(active) if flag]))
    lam = model.lam
    c = 2.0 * (1.0 + a_norm) * x_norm
    g = np.full(stab.n_max - 1, stab.eps_hat * np.exp(lam))
    steps = np.arange(stab.n_max)
    envelope = gronwall_bound(c, g) * np.exp(-lam * steps)
    norms_array = np.array(norms)
    envelope_holds = bool(np.all(within(norms_array, envelope, rtol=1e-9)))
    hypothesis_holds = gronwall_hypothesis(np.exp(lam * steps) * norms_array, c, g)
    rate = target_rate(lam, stab.eps_hat)
    c_eps = min(r * np.exp(stab.eps * k) for k, r in enumerate(r_hats)) / 2.0
    # x on the boundary of the admissible ball gives c == c_eps up to rounding
    radius_condition = lemma_l8_check(c, rate, stab.eps, c_eps * (1.0 + 1e-9), stab.n_max - 1)
    amplification = tuple(float(b / a) if a > 0 else 0.0 for a, b in zip(norms[:-1], norms[1:]))
    fit = decay_rate_fit(norms)
    certified = not any(active) and envelope_holds and radius_condition \
        and (fit.rate == np.inf or fit.certifies(stab.mu))
    path = SampledPath(0.0, config.grid_step, np.concatenate(pieces))
    consistency = None
    if check_consistency and not any(active):
        direct = picard_solve(x, noise, model, config.model_copy(update={'T': float(stab.n_max)}))
        consistency = float(np.max(np.abs(direct.path.values - path.values)))
    logger.info('Fitted decay rate {:.4g} (target mu {:.4g}); certificate {}'.format(
        fit.rate, stab.mu, 'granted' if certified else 'not granted'))
    return StabilityReport(tuple(norms), tuple(radii), tuple(r_hats), tuple(float(e) for e in envelope),
                           tuple(active), amplification, tuple(tempered), fit, float(C), x_norm, float(rate),
                           envelope_holds, hypothesis_holds, radius_condition, certified, path, consistency)


STABILITY_COLUMNS = ['n', 'norm_beta', 'R', 'R_hat', 'gronwall_bound', 'cutoff_active']


def write_stability_csv(filename, report):
    rows = zip(range(len(report.norms)), report.norms, report.R, report.R_hat, report.gronwall_bound,
               report.cutoff_active)
    return write_csv(filename, STABILITY_COLUMNS, rows)


def stability_summary(report, stab):
    lines = ['fitted_rate = {:.6g}'.format(report.fit.rate),
             'fit_intercept = {:.6g}'.format(report.fit.intercept),
             'fit_r_squared = {:.6g}'.format(report.fit.r_squared),
             'target_mu = {:.6g}'.format(stab.mu),
             'rate_bound = {:.6g}'.format(report.rate_bound),
             'C = {:.6g}'.format(report.C),
             'max_amplification = {:.6g}'.format(max(report.amplification, default=0.0)),
             'envelope_holds = {}'.format(report.envelope_holds),
             'gronwall_hypothesis_holds = {}'.format(report.hypothesis_holds),
             'radius_condition = {}'.format(report.radius_condition),
             'cutoff_active_any = {}'.format(not report.truncation_inactive)]
    if report.consistency_error is not None:
        lines.append('consistency_error = {:.6g}'.format(report.consistency_error))
    lines.append('certificate = {}'.format('granted' if report.certified else 'not granted'))
    return lines
