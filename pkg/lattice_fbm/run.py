# -*- coding: utf-8 -*-
import logging
import multiprocessing as mp
import os
from timeit import default_timer as timer

import numpy as np

from .fbm_noise import estimate_holder_seminorm_path, hurst_scale_regression, sample_noise
from .lattice_ops import default_initial_condition
from .mild_solver import euler_refinement, picard_solve, verify_cocycle, verify_convolution_bounds, \
    verify_drift_bound, write_solution_csv
from .stability_lab import (CutoffFunction, RadialMap, concatenated_solve, empirical_young_constant,
                            gronwall_bound, gronwall_hypothesis, lemma_l8_check, lemma_l8_crossing,
                            lemma_l21_check, neighborhood_radius, stability_constant, stability_summary,
                            write_stability_csv)
from .utils import VerificationReport, make_outdir, write_csv, write_noise_csv, write_summary
from .young_integral import OperatorPath, integral_fractional, integral_young_sums, verify_backend_agreement, \
    verify_young_bound, verify_young_refinement

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_NOT_CERTIFIED = 2
HURST_TOLERANCE = 0.05
HURST_STATISTIC = 'rms'
YOUNG_REFINEMENT = 4
EULER_RATIO = 1.4


def run_fbm(cfg, seed):
    noise = sample_noise(cfg.noise_config(seed), method=cfg.experiment.sampler)
    holder = cfg.holder_config()
    # Nodes are independent fBm copies; pooling them narrows the slope estimate
    nodes = [i for i, s in enumerate(noise.config.sigma) if s != 0.0]
    estimate = float(np.mean([hurst_scale_regression(noise, node=i, statistic=HURST_STATISTIC) for i in nodes]))
    seminorm = estimate_holder_seminorm_path(noise, holder.beta_prime, (0.0, noise.t_max))
    report = VerificationReport('hurst_seed={} statistic={}'.format(seed, HURST_STATISTIC),
                                {'hurst_estimate': estimate, 'nodes_pooled': float(len(nodes)),
                                 'seminorm_beta_prime': seminorm},
                                {'hurst_estimate': int(abs(estimate - cfg.noise.hurst) > HURST_TOLERANCE)})
    return noise, [report]


def run_integrate(cfg, seed):
    noise = sample_noise(cfg.noise_config(seed), method=cfg.experiment.sampler)
    holder = cfg.holder_config()
    T = cfg.solver_config().T
    segment = noise.segment(0.0, T)
    integrand = OperatorPath(0.0, segment.step, np.exp(-segment.times)[:, None] * np.ones(segment.window))
    sums = integral_young_sums(integrand, noise, 0.0, T)
    fractional = integral_fractional(integrand, noise, 0.0, T, holder.alpha, holder=holder)
    rows = [(i, sums[i], fractional[i]) for i in range(noise.window)]
    node = int(np.argmax(np.abs(noise.config.sigma)))
    reports = [verify_backend_agreement(integrand, noise, 0.0, T, holder),
               verify_young_bound(OperatorPath.diagonal(segment), noise, 0.0, T, holder, n_pairs=40, seed=seed,
                                  nodes=[node])]
    if (segment.n_points - 1) % YOUNG_REFINEMENT == 0:
        reports.append(verify_young_refinement(integrand, noise, 0.0, T, holder, factor=YOUNG_REFINEMENT,
                                               n_pairs=40, seed=seed, nodes=[node]))
    else:
        logger.warning('{} steps do not split into {} coarse cells; skipping the refinement check'.format(
            segment.n_points - 1, YOUNG_REFINEMENT))
    return rows, reports


def run_solve(cfg, seed):
    config = cfg.solver_config()
    model = cfg.model()
    noise = sample_noise(cfg.noise_config(seed), method=cfg.experiment.sampler)
    x = default_initial_condition(model.window, cfg.lattice.initial_amplitude, cfg.lattice.initial_width)
    solution = picard_solve(x, noise, model, config)
    reports = [VerificationReport('picard', {'iterations': float(solution.iterations),
                                             'last_contraction': solution.contraction_factors[-1]
                                             if solution.contraction_factors else 0.0,
                                             'residual': solution.residual, 'rho': solution.rho,
                                             'max_iterate_norm': solution.max_iterate_norm,
                                             'ball_radius': solution.ball_radius_used},
                                  {'max_iterate_norm': int(not solution.within_ball)}),
               verify_convolution_bounds(solution.path, noise, model, config),
               verify_drift_bound(solution.path, model, config)]
    if config.n_steps % 8 == 0:
        coarse, fine = euler_refinement(x, noise, model, config)
        ratio = coarse / fine if fine > 0.0 else np.inf
        reports.append(VerificationReport('euler_refinement', {'error_coarse': coarse, 'error_fine': fine,
                                                               'reduction': ratio},
                                          {'reduction': int(not ratio >= EULER_RATIO)}))
    return solution, reports


def run_cocycle(cfg, seed):
    model = cfg.model()
    noise = sample_noise(cfg.noise_config(seed), method=cfg.experiment.sampler)
    x = default_initial_condition(model.window, cfg.lattice.initial_amplitude, cfg.lattice.initial_width)
    report = verify_cocycle(x, noise, model, cfg.solver_config(), cfg.cocycle.t, cfg.cocycle.tau, cfg.cocycle.tol)
    return None, [report]


def run_stability(cfg, seed):
    config = cfg.solver_config()
    model = cfg.model()
    stab = cfg.stability
    noise = sample_noise(cfg.noise_config(seed), method=cfg.experiment.sampler)
    chi = CutoffFunction()
    C = stab.C if stab.C is not None else stability_constant(
        model, chi, 2.0 * empirical_young_constant(noise, config.holder))
    radius = neighborhood_radius(noise, stab, model, config.holder, C)
    shape = default_initial_condition(model.window, 1.0, cfg.lattice.initial_width)
    x = radius * shape / np.linalg.norm(shape)
    report = concatenated_solve(x, noise, stab, model, config, chi=chi, C=C,
                                check_consistency=cfg.experiment.check_consistency)
    return report, []


def run_appendix(cfg, seed):
    """Discrete Gronwall, the comparison lemma and the radius lemma on randomized and closed-form cases."""
    rng = np.random.default_rng(seed)
    suite = cfg.appendix
    gronwall_violations, extremal_error = 0, 0.0
    for _ in range(suite.n_random):
        n = int(rng.integers(1, 20))
        c = float(rng.uniform(0.0, 2.0))
        g = rng.uniform(0.0, 1.0, size=n)
        y = np.empty(n + 1)
        for k in range(n + 1):
            y[k] = (c + np.dot(g[:k], y[:k])) * rng.uniform(0.0, 1.0)
        if not gronwall_hypothesis(y, c, g) or np.any(y > gronwall_bound(c, g) * (1 + 1e-12)):
            gronwall_violations += 1
    extremal = np.empty(11)
    for k in range(11):
        extremal[k] = 1.0 + extremal[:k].sum()
    extremal_error = float(np.max(np.abs(extremal - gronwall_bound(1.0, np.ones(10)))))
    l8_disagreements = 0
    for _ in range(suite.n_random):
        v0, C_eps = rng.uniform(0.1, 2.0, size=2)
        mu, eps = rng.uniform(0.0, 1.0, size=2)
        n = int(rng.integers(1, 50))
        crossing = lemma_l8_crossing(v0, mu, eps, C_eps)
        expected = crossing is None or crossing > n
        l8_disagreements += int(expected != lemma_l8_check(v0, mu, eps, C_eps, n))
    family = cfg.model().family
    reports = [VerificationReport('gronwall', {'violations': float(gronwall_violations),
                                               'extremal_error': extremal_error},
                                  {'violations': gronwall_violations, 'extremal_error': int(extremal_error > 0)}),
               VerificationReport('lemma_l8', {'disagreements': float(l8_disagreements)},
                                  {'disagreements': l8_disagreements}),
               lemma_l21_check(RadialMap.linear(suite.kappa), np.linspace(0.05, 1.5, suite.ladder_size))]
    if family.kind == 'stability':
        ceiling = RadialMap.from_family(family).profile(family.delta)
        reports.append(lemma_l21_check(family, np.linspace(0.05, 0.95, suite.ladder_size) * ceiling))
    return None, reports


RUNNERS = {
    'fbm': run_fbm,
    'integrate': run_integrate,
    'solve': run_solve,
    'cocycle': run_cocycle,
    'stability': run_stability,
    'appendix': run_appendix,
}


def _run_seed(cfg, seed):
    start = timer()
    result = RUNNERS[cfg.experiment.kind](cfg, seed)
    logger.debug('Seed {} took {} seconds.'.format(seed, round(timer() - start, 1)))
    return result


def _map(cfg, seeds, pools):
    if pools == 1 or len(seeds) == 1:
        return [_run_seed(cfg, seed) for seed in seeds]
    processes = mp.cpu_count() if pools < 0 else pools
    logger.debug(f'Using {processes} CPUs')
    with mp.Pool(processes) as pool:
        return pool.starmap(_run_seed, [(cfg, seed) for seed in seeds])


def _write_artifacts(cfg, seeds, results):
    kind, out = cfg.experiment.kind, cfg.experiment.out_dir
    artifacts = []
    for seed, (payload, _) in zip(seeds, results):
        filename = os.path.join(out, '{}_seed{}.csv'.format(kind, seed))
        if kind == 'fbm':
            artifacts.append(write_noise_csv(filename, payload))
        elif kind == 'integrate':
            artifacts.append(write_csv(filename, ['node', 'young_sums', 'fractional'], payload))
        elif kind == 'solve':
            artifacts.append(write_solution_csv(filename, payload))
        elif kind == 'stability':
            artifacts.append(write_stability_csv(filename, payload))
    return artifacts


def run_experiment(cfg, pools=1):
    """
    Run one experiment kind over every seed and write its CSV files and summary
    :param cfg: ExperimentConfig
    :param pools: worker processes; -1 for all CPUs, 1 for serial
    :return: (exit status, list of written files)
    """
    start = timer()
    kind = cfg.experiment.kind
    seeds = cfg.experiment.seeds if kind != 'appendix' else cfg.experiment.seeds[:1]
    logger.info('Running {} for seeds {}'.format(kind, seeds))
    make_outdir(cfg.experiment.out_dir)
    results = _map(cfg, seeds, pools)
    t_run = timer()
    logger.debug('Experiment took {} seconds.'.format(round(t_run - start, 1)))

    artifacts = _write_artifacts(cfg, seeds, results)
    lines = ['# configuration'] + cfg.echo() + ['# results']
    status = EXIT_OK
    for seed, (payload, reports) in zip(seeds, results):
        lines.append('seed = {}'.format(seed))
        for report in reports:
            lines.extend(report.summary_lines())
            if not report.passed:
                status = EXIT_FAILED
        if kind == 'stability':
            lines.extend(stability_summary(payload, cfg.stability))
            if not payload.certified and status == EXIT_OK:
                status = EXIT_NOT_CERTIFIED
    passed = sum(report.passed for _, reports in results for report in reports)
    total = sum(len(reports) for _, reports in results)
    lines.append('passed = {}/{}'.format(passed, total))
    artifacts.append(write_summary(os.path.join(cfg.experiment.out_dir, '{}_summary.txt'.format(kind)), lines))
    logger.info('Total elapsed time: {} minutes.'.format(round((timer() - start) / 60, 3)))
    return status, artifacts
