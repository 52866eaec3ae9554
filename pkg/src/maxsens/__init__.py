"""Stochastic derivative estimation for expected performances of max-stable fields.

Modules
-------
core        domain types, GEV transform, moments and the powered-cost performance
gauss       normal functions, multivariate normal probabilities, random streams
simulate    exact Brown-Resnick and storm-process Smith simulation
lrm         bivariate density, score and likelihood-ratio estimator
mdensity    general-M exponent measure, block derivatives and Gibbs density
ipa         pathwise derivative of the Smith field and the IPA estimator
oracle      exact correlation and sensitivities by quadrature
fdcheck     common-random-number finite-difference controls
experiment  replicated experiments and CSV/JSON output
cli         command-line harness
"""
from .core import (
    BrParams,
    Margins,
    ParameterError,
    SensitivityEstimate,
    SigmaGradient,
    Site,
    SmithParams,
    frechet_to_gev,
    h_gradient,
    h_performance,
    moment_c,
    moment_d,
    semivariogram,
    smith_variogram,
)
from .ipa import dlog_y_dsigma, ipa_estimate
from .lrm import BivariateScore, bivariate_density, lrm_estimate, score
from .oracle import (
    QuadConfig,
    analytic_correlation,
    analytic_sensitivity,
    extremal_coefficient,
    g_function,
)
from .simulate import SimConfig, simulate_brown_resnick, simulate_smith

__version__ = "0.1.0"
