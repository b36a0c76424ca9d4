# -*- coding: utf-8 -*-
import csv
import hashlib
import logging
import os
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

logger = logging.getLogger(__name__)

# Slack for comparing a computed left side against a computed bound
RTOL = 1e-12
ATOL = 1e-14


def within(lhs, rhs, rtol=RTOL, atol=ATOL):
    """lhs <= rhs up to rounding"""
    return lhs <= rhs * (1.0 + rtol) + atol


@dataclass(frozen=True)
class VerificationReport:
    """
    Outcome of an inequality or identity check
    :param name: what was checked
    :param measurements: largest lhs / rhs ratio (or residual) per check
    :param violations: number of failing cases per check
    :param skipped: degenerate cases that were not evaluated
    """
    name: str
    measurements: Dict[str, float]
    violations: Dict[str, int] = field(default_factory=dict)
    skipped: int = 0

    @property
    def passed(self):
        return all(count == 0 for count in self.violations.values())

    def summary_lines(self):
        lines = ['[{}] {}'.format(self.name, 'PASS' if self.passed else 'FAIL')]
        for key, value in self.measurements.items():
            lines.append('  {} = {:.6g} (violations: {})'.format(key, value, self.violations.get(key, 0)))
        if self.skipped:
            lines.append('  skipped = {}'.format(self.skipped))
        return lines


def sigma_digest(sigma):
    """Short, stable fingerprint of the node weights."""
    return hashlib.sha256(np.asarray(sigma, dtype='<f8').tobytes()).hexdigest()[:12]


def make_outdir(outdir):
    if not os.path.exists(outdir):
        os.makedirs(outdir)
        logger.debug(f'Creating directory: {outdir}')
    return outdir


def write_csv(filename, header, rows, comments=()):
    """
    Write a CSV file with fixed column order
    :param filename: output path
    :param header: column names
    :param rows: iterable of rows, numbers are written with repr precision
    :param comments: lines written first, each prefixed with '# '
    :return: filename
    """
    try:
        with open(filename, 'w', newline='') as handle:
            for line in comments:
                handle.write('# {}\n'.format(line))
            writer = csv.writer(handle)
            writer.writerow(header)
            for row in rows:
                writer.writerow([_format(value) for value in row])
    except OSError as err:
        raise OSError('Could not write {}: {}'.format(filename, err)) from err
    logger.debug('Wrote {}'.format(filename))
    return filename


def _format(value):
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_path_csv(filename, times, values, comments=()):
    """Columns t, node_0, ..., node_{N-1}."""
    values = np.asarray(values)
    header = ['t'] + ['node_{}'.format(i) for i in range(values.shape[1])]
    return write_csv(filename, header, (np.concatenate([[t], row]) for t, row in zip(times, values)), comments)


def write_noise_csv(filename, noise):
    """Noise samples with H, sigma digest and seed in the header comment."""
    comment = 'hurst={} sigma_digest={} seed={}'.format(noise.config.hurst, sigma_digest(noise.config.sigma),
                                                      noise.config.seed)
    return write_path_csv(filename, noise.times, noise.samples, comments=[comment])


def write_summary(filename, lines):
    try:
        with open(filename, 'w') as handle:
            handle.write('\n'.join(lines) + '\n')
    except OSError as err:
        raise OSError('Could not write {}: {}'.format(filename, err)) from err
    logger.debug('Wrote {}'.format(filename))
    return filename
