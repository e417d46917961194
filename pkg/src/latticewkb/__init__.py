"""Discrete Schrödinger equations on the half-line lattice.

Solutions of ``(-Delta + V) psi = 0`` and their behavior at infinity:
subdominant solutions by backward recursion, Liouville-Green comparison
models, a variation-of-constants perturbation scheme with dichotomy
classification, Green-diagonal reconstruction, Agmon distances and the
orthogonal-polynomial form of the recurrence.
"""

__version__ = "0.1.0"

from .errors import (ConfigError, ContractionError, ConvergenceError, DegenerateRootError,
                     DomainError, InvariantError, LatticeError, NumericalError,
                     NumericalOverflowError, SummabilityWarning, WindowError)
from .sequences import LatticeSequence, LogSequence
from .potentials import PotentialSpec, exponential_root
from .core import (SolutionBasis, backward_subdominant, exponential_basis, forward_solve,
                   forward_solve_log, reflect_symmetry, residual, second_solution, wronskian)

__all__ = [
    "__version__",
    "ConfigError", "ContractionError", "ConvergenceError", "DegenerateRootError",
    "DomainError", "InvariantError", "LatticeError", "NumericalError",
    "NumericalOverflowError", "SummabilityWarning", "WindowError",
    "LatticeSequence", "LogSequence", "PotentialSpec", "exponential_root",
    "SolutionBasis", "backward_subdominant", "exponential_basis", "forward_solve",
    "forward_solve_log", "reflect_symmetry", "residual", "second_solution", "wronskian",
]
