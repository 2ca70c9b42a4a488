"""Arithmetic tables, real characters, sieve weights and twin-prime sum experiments."""

from .arith import ArithWindow, build_window, dirichlet_convolve, primes_up_to, von_mangoldt_table
from .characters import RealCharacter, kronecker_symbol, l_one, scan_exceptional
from .decomp import DecompSet, build_decomp, verify_inversion
from .densities import DensityParams, C_of_h, twin_constant_B
from .experiments import ExperimentConfig, ExperimentContext, make_config, shift_average, twin_sum_S
from .report import ExperimentReport
from .weights import SieveWeights, build_weights, theta_table

__version__ = "0.1.0"

__all__ = [
    "ArithWindow",
    "build_window",
    "dirichlet_convolve",
    "primes_up_to",
    "von_mangoldt_table",
    "RealCharacter",
    "kronecker_symbol",
    "l_one",
    "scan_exceptional",
    "DecompSet",
    "build_decomp",
    "verify_inversion",
    "DensityParams",
    "C_of_h",
    "twin_constant_B",
    "ExperimentConfig",
    "ExperimentContext",
    "make_config",
    "shift_average",
    "twin_sum_S",
    "ExperimentReport",
    "SieveWeights",
    "build_weights",
    "theta_table",
]
