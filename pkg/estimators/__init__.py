from .intercept_maxscore import MaxScoreResult, default_alpha_range, maxscore_intercept, maxscore_objective
from .qmle_logit import LogitConfig, LogitFit, logit_fit, logit_gradient, logit_hessian, logit_loglik
from .svm_solver import (
    SvmConfig,
    SvmFit,
    estimate_class_weight,
    kkt_violation,
    svm_fit,
    svm_objective_gradient,
    svm_primal_objective,
)
from .inference import CovarianceEstimate, hessian_hat, j_matrix_hat, sandwich_covariance

__all__ = [
    "CovarianceEstimate",
    "LogitConfig",
    "LogitFit",
    "MaxScoreResult",
    "SvmConfig",
    "SvmFit",
    "default_alpha_range",
    "estimate_class_weight",
    "hessian_hat",
    "j_matrix_hat",
    "kkt_violation",
    "logit_fit",
    "logit_gradient",
    "logit_hessian",
    "logit_loglik",
    "maxscore_intercept",
    "maxscore_objective",
    "sandwich_covariance",
    "svm_fit",
    "svm_objective_gradient",
    "svm_primal_objective",
]
