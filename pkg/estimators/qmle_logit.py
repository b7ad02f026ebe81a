"""
Logistic-regression QMLE of the binary choice model.

The comparison estimator: maximizes the average log-likelihood

    (1/n) sum_i log G(y_i (alpha + x_i'beta)),   G(t) = 1 / (1 + exp(-t))

by Newton-Raphson with step halving, starting from theta = 0.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit

from models.errors import DimensionMismatchError, InvalidConfigError, MissingClassError
from models.model_core import Dataset, Theta

logger = logging.getLogger(__name__)

_MAX_HALVINGS = 60


@dataclass(frozen=True)
class LogitConfig:
    """
    Attributes:
        tol (float): Sup-norm gradient threshold for convergence
        max_iter (int): Maximum Newton iterations
        separation_norm_bound (float): ||theta|| beyond which the sample is
            treated as (quasi-)separated
    """

    tol: float = 1e-10
    max_iter: int = 100
    separation_norm_bound: float = 1e4

    def __post_init__(self):
        if not (self.tol > 0 and self.max_iter > 0 and self.separation_norm_bound > 0):
            raise InvalidConfigError("logit settings must all be positive")


@dataclass(frozen=True)
class LogitFit:
    theta: Theta
    loglik: float
    gradient_norm: float
    iterations: int
    converged: bool
    separated: bool = False


def _index(theta_vector: np.ndarray, design: np.ndarray) -> np.ndarray:
    return design @ theta_vector


def _check(theta: Theta, data: Dataset) -> None:
    if theta.m != data.m:
        raise DimensionMismatchError(f"theta has {theta.m} slopes, data has {data.m} covariates")


def logit_loglik(theta: Theta, data: Dataset) -> float:
    """Average log-likelihood, using -log(1 + exp(-y m)) = -logaddexp(0, -y m)."""
    _check(theta, data)
    margins = data.labels * _index(theta.as_vector(), data.design_matrix())
    return float(-np.mean(np.logaddexp(0.0, -margins)))


def logit_gradient(theta: Theta, data: Dataset) -> np.ndarray:
    """Gradient of the average log-likelihood: (1/n) sum y_i G(-y_i m_i) z_i."""
    _check(theta, data)
    design = data.design_matrix()
    margins = data.labels * _index(theta.as_vector(), design)
    return design.T @ (data.labels * expit(-margins)) / data.n


def logit_hessian(theta: Theta, data: Dataset) -> np.ndarray:
    """Hessian of the average log-likelihood: -(1/n) sum G(m_i)(1 - G(m_i)) z_i z_i'."""
    _check(theta, data)
    design = data.design_matrix()
    prob = expit(_index(theta.as_vector(), design))
    curvature = prob * (1.0 - prob)
    return -(design.T * curvature) @ design / data.n


def logit_fit(data: Dataset, config: Optional[LogitConfig] = None) -> LogitFit:
    """
    Maximize the average logistic log-likelihood.

    Args:
        data (Dataset): Sample with both labels present
        config (LogitConfig, optional): Stopping rules

    Returns:
        LogitFit: converged is False (and separated True) when the iterate
            diverges past the norm bound or perfectly separates the sample

    Raises:
        MissingClassError: If one of the labels is absent
    """
    config = config or LogitConfig()
    if not data.has_both_classes():
        raise MissingClassError("logit_fit needs both labels in the sample")

    design = data.design_matrix()
    y = data.labels
    theta = np.zeros(design.shape[1])

    def loglik(vector: np.ndarray) -> float:
        return float(-np.mean(np.logaddexp(0.0, -y * (design @ vector))))

    current = loglik(theta)
    converged = False
    separated = False
    iterations = 0
    gradient = design.T @ (y * expit(-y * (design @ theta))) / data.n

    while iterations < config.max_iter:
        if np.max(np.abs(gradient)) <= config.tol:
            converged = True
            break

        prob = expit(design @ theta)
        hessian = -(design.T * (prob * (1.0 - prob))) @ design / data.n
        try:
            direction = np.linalg.solve(hessian, -gradient)
        except np.linalg.LinAlgError:
            direction = np.linalg.lstsq(hessian, -gradient, rcond=None)[0]

        # step halving keeps the log-likelihood nondecreasing
        step = 1.0
        for _ in range(_MAX_HALVINGS):
            candidate = theta + step * direction
            value = loglik(candidate)
            if value >= current:
                break
            step *= 0.5
        else:
            logger.warning("Logit line search failed at iteration %d", iterations)
            break

        theta, current = candidate, value
        iterations += 1
        gradient = design.T @ (y * expit(-y * (design @ theta))) / data.n

        if np.linalg.norm(theta) > config.separation_norm_bound:
            separated = True
            logger.warning("Logit iterate exceeded norm %.0e: sample looks separated",
                           config.separation_norm_bound)
            break
    else:
        converged = bool(np.max(np.abs(gradient)) <= config.tol)

    if not separated and np.all(y * (design @ theta) > 0):
        # a finite maximizer cannot classify every observation strictly correctly
        separated = True
        converged = False
        logger.warning("Logit fit separates the sample; the MLE does not exist")

    return LogitFit(
        theta=Theta.from_vector(theta),
        loglik=current,
        gradient_norm=float(np.max(np.abs(gradient))),
        iterations=iterations,
        converged=converged,
        separated=separated,
    )
