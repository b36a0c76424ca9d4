# -*- coding: utf-8 -*-

"""Console script for lattice_fbm."""
import argparse
import logging
import sys

from .input_validation import KINDS, ConfigError, load_config
from .mild_solver import ConvergenceError
from .run import EXIT_FAILED, run_experiment
from .settings import get_settings


def main(argv=None):
    """Console script for lattice_fbm."""
    settings = get_settings()
    parser = argparse.ArgumentParser(prog='lattice_fbm')

    parser.add_argument("kind",
                        choices=KINDS,
                        help="Experiment to run")

    parser.add_argument("-c", "--config",
                        dest='config',
                        default=None,
                        help="YAML file with the experiment configuration (default: all defaults)")

    parser.add_argument("-o", "--out",
                        dest='out',
                        default=None,
                        help="Convenience function to override experiment.out_dir")

    parser.add_argument("-s", "--seed",
                        dest='seed',
                        type=int,
                        default=None,
                        help="Run a single seed instead of experiment.seeds")

    parser.add_argument("-g", "--grid-exp",
                        dest='grid_exp',
                        type=int,
                        default=None,
                        help="Grid step 2^-k for noise and solver")

    parser.add_argument("-P", "--pools",
                        dest='pools',
                        type=int,
                        default=settings.pools,
                        help="How many CPUs to use (-1 = all, default from LATTICE_FBM_POOLS or 1)")

    parser.add_argument("-V", "--verbose",
                        dest="logLevel",
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'],
                        default=settings.log_level,
                        help="Set the logging level")

    args = parser.parse_args(argv)
    logging.basicConfig(stream=sys.stderr, level=args.logLevel,
                        format='%(name)s (%(levelname)s): %(message)s')

    logger = logging.getLogger(__name__)
    logger.setLevel(args.logLevel)

    try:
        cfg = load_config(args.config)
        cfg = cfg.override('experiment', 'kind', args.kind)
        if args.out:
            cfg = cfg.override('experiment', 'out_dir', args.out)
        elif args.config is None:
            cfg = cfg.override('experiment', 'out_dir', settings.out_dir)
        if args.seed is not None:
            cfg = cfg.override('experiment', 'seeds', [args.seed])
        if args.grid_exp is not None:
            cfg = cfg.override('solver', 'grid_step', 2.0 ** -args.grid_exp)
        logging.debug(f'Running with parameters: {cfg.echo()}')
        status, artifacts = run_experiment(cfg, pools=args.pools)
    except (ConfigError, ConvergenceError, ValueError, OSError) as err:
        logger.error(str(err))
        return EXIT_FAILED
    for artifact in artifacts:
        logger.info('Wrote {}'.format(artifact))
    return status


if __name__ == "__main__":
    sys.exit(main())  # pragma: no cover
