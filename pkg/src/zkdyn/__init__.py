"""Lyapunov exponents and entropies of smooth Z^k-actions on tori.

Generator, random and directional Lyapunov spectra are estimated by QR
re-orthonormalization and compared with the closed-form entropy formulas;
linear toral actions supply exact reference values.
"""
from .action import Generator, ZkAction, apply_lattice, apply_word, make_action, tangent_apply, wrap
from .directional import (
    direction_sweep,
    directional_entropy,
    directional_entropy_dimension,
    directional_exponents,
    directional_word_stream,
    extend_to_rk,
    lattice_path,
    octant_reduce,
    rational_check,
)
from .errors import *  # noqa: F401,F403
from .random_action import (
    EntropyEstimate,
    RandomModel,
    random_entropy_dimension,
    random_entropy_pesin,
    random_entropy_ruelle_check,
    random_exponents,
    sample_omega,
    skew_step,
)
from .spectrum import EstimatorConfig, LyapunovSpectrum, generator_spectrum, group_exponents, qr_exponents
from .toral import MODELS, analytic_spectrum, conjugate_action, from_matrices, matrix_entropy

__version__ = "0.1.0"
