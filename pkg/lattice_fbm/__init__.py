# -*- coding: utf-8 -*-
"""Top-level package for lattice-fbm."""
__author__ = """lattice_fbm developers"""
__version__ = '0.1.0'

from .input_validation import load_config, parse_config
from .run import run_experiment
