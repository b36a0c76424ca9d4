__author__ = """lattice_fbm developers"""
__version__ = '0.1.0'
from .lattice_fbm import cli
from .lattice_fbm import fbm_noise
from .lattice_fbm import holder_spaces
from .lattice_fbm import input_validation
from .lattice_fbm import lattice_ops
from .lattice_fbm import mild_solver
from .lattice_fbm import run
from .lattice_fbm import settings
from .lattice_fbm import stability_lab
from .lattice_fbm import utils
from .lattice_fbm import young_integral
