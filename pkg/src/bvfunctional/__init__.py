"""Functions of bounded variation on an interval, integral functionals with
recession terms, lifting measures and strict/area-strict convergence
experiments."""

from .bvfun import (BVFunction1D, CantorComponent, DerivativeDecomposition, Domain1D, JumpAtom,
                    Piece, RadialBV, SmoothMap, UnsupportedCantorComposition, cantor_function,
                    compose, decompose, from_callables, jump_average, lp_distance,
                    piecewise_constant, piecewise_linear, radial_lp_distance, radial_lp_norm,
                    radial_total_variation, reflected_extension, sup_distance, total_variation,
                    volpert_average)
from .convergence import (ConvergenceReport, SequenceFamily, area_strict_distance,
                          embedding_experiment, make_family, make_limit, mollify, run_experiment,
                          strict_distance)
from .functional import FunctionalValue, area_functional, evaluate_F, evaluate_F_graph
from .integrand import (Integrand, NoRecession, NotHomogeneous, PerspectiveIntegrand,
                        estimate_recession, get_integrand, growth_check, parse_integrand,
                        perspective, truncate_integrand, validate_recession)
from .lifting import (LiftingMeasure, SupportViolation, TestFunction, build_lifting,
                      functional_via_lifting, lifting_convergence_report, pushforward_pair,
                      tail_gradient_mass, total_mass, Q)
from .quadrature import DEFAULT_SPEC, QuadratureFailure, QuadratureSpec

__version__ = "0.1.0"
