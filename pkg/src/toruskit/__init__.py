"""toruskit: numerics for separability of perturbed Liouville systems on tori.

Submodules:
    potentials    sparse Fourier potentials on the circle / torus, spectra
    action_angle  rotating-branch action-angle charts by quadrature
    elliptic      AGM elliptic integrals; closed-form pendulum charts
    mather        alpha-functions, separatrix constants, torus-graph gradients
    averaging     resonant tori, torus averages, separability verdicts
    gram          deformed-mode Gram matrices and rank certificates
    hje           first-order transport equation and Lindstedt truncation
    flow          symplectic integration and dynamical diagnostics
    cli           batch front-end (`toruskit <command> --config ...`)
"""

from .action_angle import (ActionAngleChart, MechanicalSystem1D, action,
                           angle_of_position, energy_of_action, frequency,
                           position_of_angle)
from .averaging import (ResonantTorus, SeparabilityReport, annihilation_flags,
                        average_along_torus, resonant_torus, separability_test)
from .elliptic import (EllipticParams, complete_K, incomplete_F, jacobi_am,
                       pendulum_angle, pendulum_position)
from .errors import ConfigError, DomainError, InfeasibleResonanceError
from .gram import GramReport, full_rank_certificate, gram_matrix, mode_function, mu_sweep
from .hje import FirstOrderSolution, lindstedt_first_order, mean_value, solve_first_order
from .mather import AlphaFunction1D, alpha_1d, alpha_sum, c_plus, grad_u_c, separatrix_constant
from .potentials import (PeriodicPotential1D, ResonanceVector, SpectrumSets,
                         TorusPotential, degree, normalize_min_zero,
                         separable_part, spectrum_sets)

__all__ = [
    "ActionAngleChart", "MechanicalSystem1D", "action", "angle_of_position",
    "energy_of_action", "frequency", "position_of_angle",
    "ResonantTorus", "SeparabilityReport", "annihilation_flags",
    "average_along_torus", "resonant_torus", "separability_test",
    "EllipticParams", "complete_K", "incomplete_F", "jacobi_am",
    "pendulum_angle", "pendulum_position",
    "ConfigError", "DomainError", "InfeasibleResonanceError",
    "GramReport", "full_rank_certificate", "gram_matrix", "mode_function", "mu_sweep",
    "FirstOrderSolution", "lindstedt_first_order", "mean_value", "solve_first_order",
    "AlphaFunction1D", "alpha_1d", "alpha_sum", "c_plus", "grad_u_c",
    "separatrix_constant",
    "PeriodicPotential1D", "ResonanceVector", "SpectrumSets", "TorusPotential",
    "degree", "normalize_min_zero", "separable_part", "spectrum_sets",
]

__version__ = "0.1.0"
