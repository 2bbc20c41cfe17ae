"""Numerical laboratory for the SWKB condition on conditionally exactly solvable
and Krein-Adler deformed potentials."""
from .errors import ConfigError, ConstraintViolation, MultipleBrackets, SwkbLabError
from .systems import SystemSpec, build_system
from .swkb import swkb_integral, swkb_sweep, spectrum_from_swkb
from .residual import residual_report, domain_map, convergence_ratio
from .complexscan import cell_residue_scan, qhj_action

__version__ = "0.1.0"
