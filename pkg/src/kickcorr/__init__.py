"""Full CI ground states, reduced density matrices, cumulant-based correlation
measures and the survival probability of a state after an impulsive one-body kick."""

from .asymptotics import build_kappa7_state, kappa7_reference
from .ci import CIVector, ConvergenceError, SolveOptions, solve_ground
from .detspace import DetSpace
from .integrals import (IntegralSet, OneBodyOperator, make_hubbard_model, make_ring_dipole,
                        parse_fcidump, parse_operator_file, write_fcidump)
from .kick import build_kick, moments_and_cumulants, survival_exact, survival_second_order
from .measures import entropy_report
from .rdm import spin_densities

__version__ = "0.1.0"

__all__ = [
    "CIVector", "ConvergenceError", "DetSpace", "IntegralSet", "OneBodyOperator", "SolveOptions",
    "build_kappa7_state", "build_kick", "entropy_report", "kappa7_reference", "make_hubbard_model",
    "make_ring_dipole", "moments_and_cumulants", "parse_fcidump", "parse_operator_file",
    "solve_ground", "spin_densities", "survival_exact", "survival_second_order", "write_fcidump",
]
