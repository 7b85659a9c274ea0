"""Verification lab for planar random waves with biased +-1 sign coefficients.

Computes the exact expectation and variance of the smoothed local L2 mass of
u(x) = sum_j C_j exp(i * lam * x . xi_j) over N equispaced unit directions,
where each C_j is +1 with probability p and -1 otherwise, and cross-checks the
closed forms against enumeration, Monte Carlo, and grid-quadrature oracles.
Scaling experiments confirm the moment growth rates and the bias thresholds at
which small-ball equidistribution survives.
"""

__version__ = "0.1.0"

from .fitting import FitResult, fit_exponent
from .model import (CutoffSpec, DirectionSet, WaveParams, build_cutoff,
                    build_directions, build_params, cutoff_mass, cutoff_value)
from .moments import (CalibratedConstants, Classification, MomentReport,
                      build_report, calibrate_constants, coin_pair_moment,
                      enumerate_moments, equidistribution_margin,
                      exact_expectation, exact_variance, exact_variance_generic,
                      expectation_bounds, variance_bound)
from .montecarlo import (CoefficientVector, DarbouxProbe, DiscretisationProbe,
                         McSummary, darboux_error, e1_error_norm,
                         grid_quadrature_mass, mass_double_sum,
                         mass_quadratic_form, mc_moments, sample_coefficients)
from .oscint import (PairKernel, QuadratureError, build_kernel, decay_bound,
                     dyadic_sum_check, export_kernel_csv, pair_integral,
                     pair_integral_2d_oracle, pair_integral_2d_parts)
from .specfun import (AsymptoticCheck, EnvelopeTable, angular_integral,
                      angular_integral_quadrature, asymptotic_check, bessel_j0,
                      residual_probe_points, stationary_leading_term,
                      surface_wave_envelope)
from .cli import (SweepConfig, SweepResult, ThresholdResult, load_config,
                  parse_config, run_sweep, threshold_experiment)

__all__ = [
    "AsymptoticCheck", "CalibratedConstants", "Classification",
    "CoefficientVector", "CutoffSpec", "DarbouxProbe", "DirectionSet",
    "DiscretisationProbe", "EnvelopeTable", "FitResult", "McSummary",
    "MomentReport", "PairKernel", "QuadratureError", "SweepConfig",
    "SweepResult", "ThresholdResult", "WaveParams", "angular_integral",
    "angular_integral_quadrature", "asymptotic_check", "bessel_j0",
    "build_cutoff", "build_directions", "build_kernel", "build_params",
    "build_report", "calibrate_constants", "coin_pair_moment", "cutoff_mass",
    "cutoff_value", "darboux_error", "decay_bound", "dyadic_sum_check",
    "e1_error_norm", "enumerate_moments", "equidistribution_margin",
    "exact_expectation", "exact_variance", "exact_variance_generic",
    "expectation_bounds", "export_kernel_csv", "fit_exponent",
    "grid_quadrature_mass", "load_config", "mass_double_sum",
    "mass_quadratic_form", "mc_moments", "pair_integral",
    "pair_integral_2d_oracle", "pair_integral_2d_parts", "parse_config",
    "residual_probe_points", "run_sweep", "sample_coefficients",
    "stationary_leading_term", "surface_wave_envelope", "threshold_experiment",
    "variance_bound",
]
