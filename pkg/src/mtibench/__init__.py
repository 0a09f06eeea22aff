"""Uniformly accurate multiscale time integrators and classical baselines for

    eps^2 y'' + (alpha + 1/eps^2) y + f(y) = 0,   0 < eps <= 1,

with a benchmark harness that reproduces eps-tau error tables.
"""
import warnings

from numba.core.errors import NumbaExperimentalFeatureWarning

# first-class function arguments (nonlinearity kernels, step kernels) are an experimental numba feature
warnings.filterwarnings("ignore", category=NumbaExperimentalFeatureWarning)

from .model import (BLOWUP, ErrorEnergy, ErrorPair, Problem, State, convergence_rate, energy,  # noqa: E402
                    error_energy, error_pair, linear_solution)
from .nonlinearity import (General, PurePower, f_pm, f_r, flow_derivative_f_pm, flow_derivative_g_k,  # noqa: E402
                           g_k, g_pm, h_remainder, parse_nonlinearity, sin2)
from .coefficients import (CoefficientSet, coefficient_set, printed_forms, validate_coefficients)  # noqa: E402
from .decomposition import MDF, MDFA, DecomposedState, reconstruct, split  # noqa: E402
from .mti import (MtiMethod, step_mti_f_general, step_mti_f_power, step_mti_fa_general,  # noqa: E402
                  step_mti_fa_power)
from .classical import (F1, F2, FilterSet, TwoStepState, first_step, step_cnfd, step_ewi_d,  # noqa: E402
                        step_ewi_filtered, step_ewi_g, step_exfd, step_sifd)
from .integrate import METHODS, Trajectory, integrate  # noqa: E402
from .reference import (ReferenceError, ReferenceSettings, ReferenceSolution, cross_validate,  # noqa: E402
                        generate_reference)
from .harness import CellResult, SweepConfig, SweepResult, dump_trajectory, emit_table, run_sweep  # noqa: E402

__version__ = "0.1.0"
