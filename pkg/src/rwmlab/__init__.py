"""Random Walk Metropolis scaling laboratory.

Product-form targets, a vectorised RWM sampler, the large-dimension limit
formulas, a Langevin-diffusion simulator, numerical checks of the
smoothness conditions and an experiment harness.
"""
from .errors import ConfigError, QuadratureError
from .limits import acceptance_limit, limit_report, optimal_scaling, speed
from .rwm import CurveRow, RwmConfig, esjd_curve, run_chain
from .special import expected_min_one_exp, g_fn, gamma_fn, normal_cdf
from .targets import (BayesianLasso, Beta, Gaussian, GeneralizedGamma, Target, TargetError,
                      fisher_information, make_target)

__version__ = "0.1.0"

__all__ = [
    "BayesianLasso", "Beta", "ConfigError", "CurveRow", "Gaussian", "GeneralizedGamma",
    "QuadratureError", "RwmConfig", "Target", "TargetError", "acceptance_limit", "esjd_curve",
    "expected_min_one_exp", "fisher_information", "g_fn", "gamma_fn", "limit_report",
    "make_target", "normal_cdf", "optimal_scaling", "run_chain", "speed", "__version__",
]
