"""Stochastic Burgers equations, their Cole-Hopf linearization and FBSDE representations."""

from .burgers_solver import (build_linearizable_coefficients, colehopf_forward_many, relative_l2_gap,
                             residual_backward_burgers, solve_forward_burgers, solve_forward_burgers_many)
from .closed_form import (backward_scenario, example1_fields, example1_solve_coefficients,
                          example2_fields, example2_solve_coefficients, finance_parameters, named_profile)
from .cole_hopf import (TransformKernel, burgers_field_from_V, eval_general_Y, forward_transform,
                        generalized_transform, point_transform_pde_residual, psiU_from_V,
                        residual_big_constraint, residual_heat_bspde, residual_mid_constraint,
                        residual_r_bspde, terminal_compatibility_residual)
from .core import (CoefficientSet, FieldSample, ProcessSample, SemimartingaleField, SpaceTimeGrid,
                   diff_x, interpolate_shifted, sample_along)
from .errors import StochBurgersError
from .fbsde_fk import (FbsdeTriplet, McEstimate, bsde_residual, fk_backward_y, fk_backward_z,
                       fk_forward_estimate, markovian_triplet, point_transform_identity_gap,
                       simulate_forward_state)
from .heat_solver import HeatProblem, solve_pathwise_heat
from .stochastic_paths import BrownianPath, coarsen_path, ito_integral, make_brownian_path

__version__ = "0.1.0"
