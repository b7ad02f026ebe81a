"""
Plug-in sandwich covariance for the unweighted SVM estimator.

The limit covariance is H^-1 J H^-1 where J is the second moment of the hinge
subgradient and H carries a point mass at unit margins. H is estimated by
replacing the point mass with a Gaussian kernel of bandwidth h chosen by the
Silverman rule on the margins y_i (alpha + x_i'beta).
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from models.errors import (
    DimensionMismatchError,
    InvalidConfigError,
    NonConvergenceError,
    SingularHessianError,
)
from models.model_core import Dataset, Theta

from .svm_solver import SvmFit

logger = logging.getLogger(__name__)

CONDITION_LIMIT = 1e12
SILVERMAN_FACTOR = 1.06


@dataclass(frozen=True)
class CovarianceEstimate:
    covariance: np.ndarray
    hessian_hat: np.ndarray
    j_hat: np.ndarray
    bandwidth: float

    def standard_errors(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))

    def to_dict(self) -> dict:
        return {
            "covariance": self.covariance.tolist(),
            "bandwidth": self.bandwidth,
        }


def _margins(data: Dataset, theta: Theta) -> np.ndarray:
    if theta.m != data.m:
        raise DimensionMismatchError(f"theta has {theta.m} slopes, data has {data.m} covariates")
    return data.labels * (data.design_matrix() @ theta.as_vector())


def j_matrix_hat(data: Dataset, theta: Theta) -> np.ndarray:
    """(1/n) sum_i 1{1 - y_i m_i > 0} z_i z_i'"""
    active = (1.0 - _margins(data, theta)) > 0.0
    design = data.design_matrix()[active]
    return design.T @ design / data.n


def hessian_hat(data: Dataset, theta: Theta, bandwidth: float) -> np.ndarray:
    """
    Kernel surrogate of the Hessian, (1/n) sum_i K_h(1 - y_i m_i) z_i z_i'.

    Args:
        data (Dataset): Sample
        theta (Theta): Evaluation point
        bandwidth (float): Kernel bandwidth h > 0

    Returns:
        np.ndarray: (1+m) x (1+m) matrix
    """
    if not bandwidth > 0:
        raise InvalidConfigError(f"bandwidth must be positive, got {bandwidth}")
    weights = norm.pdf((1.0 - _margins(data, theta)) / bandwidth) / bandwidth
    design = data.design_matrix()
    return (design.T * weights) @ design / data.n


def silverman_bandwidth(data: Dataset, theta: Theta) -> float:
    """h = 1.06 sd(y_i m_i) n^(-1/5), population standard deviation."""
    spread = float(np.std(_margins(data, theta)))
    return SILVERMAN_FACTOR * spread * data.n ** (-0.2)


def sandwich_covariance(data: Dataset, fit: SvmFit) -> CovarianceEstimate:
    """
    Estimate Cov(theta_hat) = H^-1 J H^-1 / n at the fitted parameter.

    Raises:
        NonConvergenceError: If the fit did not converge
        SingularHessianError: If the symmetrized H has condition number above 1e12
        InvalidConfigError: If n <= 10 (1 + m)
    """
    if not fit.converged:
        raise NonConvergenceError("sandwich covariance requires a converged SVM fit")
    if data.n <= 10 * (1 + data.m):
        raise InvalidConfigError(
            f"sandwich covariance needs n > {10 * (1 + data.m)}, got n = {data.n}"
        )

    bandwidth = silverman_bandwidth(data, fit.theta)
    if not (np.isfinite(bandwidth) and bandwidth > 0):
        raise SingularHessianError("margins have zero spread; no bandwidth can be chosen")

    hessian = hessian_hat(data, fit.theta, bandwidth)
    hessian = 0.5 * (hessian + hessian.T)
    j_hat = j_matrix_hat(data, fit.theta)

    condition = np.linalg.cond(hessian) if np.all(np.isfinite(hessian)) else np.inf
    if not condition <= CONDITION_LIMIT:
        raise SingularHessianError(f"plug-in Hessian is singular (condition number {condition:.3g})")

    inverse = np.linalg.inv(hessian)
    covariance = inverse @ j_hat @ inverse / data.n
    covariance = 0.5 * (covariance + covariance.T)
    logger.debug("Sandwich covariance with bandwidth %.4g, cond(H) %.3g", bandwidth, condition)
    return CovarianceEstimate(
        covariance=covariance,
        hessian_hat=hessian,
        j_hat=j_hat,
        bandwidth=bandwidth,
    )
