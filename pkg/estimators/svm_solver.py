"""
Soft-margin linear SVM for binary choice models.

Minimizes the per-observation objective

    Q_n(theta) = (1/n) sum_i w_i [1 - y_i (alpha + x_i'beta)]_+ + (lambda/n) ||beta||^2

with w_i = 1 for y_i = +1 and w_i = w for y_i = -1 (w = 1 for the plain SVM).
The intercept is not penalized. The problem is solved through its dual

    max  sum_i a_i - 1/2 ||sum_i a_i y_i x_i||^2
    s.t. 0 <= a_i <= C_i,  sum_i a_i y_i = 0,   C_i = w_i / (2 lambda)

by sequential minimal optimization over maximal-violating pairs. Both
objectives are reported on the Q_n scale so that the duality gap is directly a
bound on primal suboptimality.
"""

import csv
import logging
from dataclasses import dataclass
from typing import Optional, TextIO, Tuple

import numpy as np

from models.errors import DimensionMismatchError, InvalidConfigError, MissingClassError
from models.model_core import Dataset, Theta

logger = logging.getLogger(__name__)

WEIGHT_NONE = "none"
WEIGHT_AUTO = "auto"
WEIGHT_FIXED = "fixed"
WEIGHT_MODES = (WEIGHT_NONE, WEIGHT_AUTO, WEIGHT_FIXED)

DEFAULT_LAMBDA = 0.5
TRACE_HEADER = ("iteration", "primal_objective", "dual_objective", "gap")

# duals within this fraction of a bound are treated as sitting on it
_BOUND_EPS = 1e-12


@dataclass(frozen=True)
class SvmConfig:
    """
    Settings for one SVM fit.

    Attributes:
        lambda_ (float): Ridge constant lambda_n (per-fit constant)
        weight_mode (str): 'none', 'auto' (w = n_+/n_-) or 'fixed'
        weight (float): The class weight when weight_mode is 'fixed'
        tol (float): Duality-gap tolerance, also the KKT tolerance band
        max_iter (int): Maximum number of pairwise updates
        check_every (int): Pairwise updates between duality-gap checks
    """

    lambda_: float = DEFAULT_LAMBDA
    weight_mode: str = WEIGHT_NONE
    weight: Optional[float] = None
    tol: float = 1e-8
    max_iter: int = 10_000_000
    check_every: int = 50

    def __post_init__(self):
        if not self.lambda_ > 0:
            raise InvalidConfigError(f"lambda must be positive, got {self.lambda_}")
        if not self.tol > 0:
            raise InvalidConfigError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1 or self.check_every < 1:
            raise InvalidConfigError("max_iter and check_every must be positive integers")
        if self.weight_mode not in WEIGHT_MODES:
            raise InvalidConfigError(f"unknown weight mode {self.weight_mode!r}")
        if self.weight_mode == WEIGHT_FIXED and not (self.weight is not None and self.weight > 0):
            raise InvalidConfigError("a fixed class weight must be a positive number")

    @classmethod
    def weighted(cls, **kwargs) -> "SvmConfig":
        """Class-weighted SVM with the estimated weight P(Y=1)/P(Y=-1)."""
        return cls(weight_mode=WEIGHT_AUTO, **kwargs)

    @classmethod
    def fixed(cls, weight: float, **kwargs) -> "SvmConfig":
        return cls(weight_mode=WEIGHT_FIXED, weight=weight, **kwargs)


@dataclass(frozen=True)
class SvmFit:
    """Result of svm_fit: the estimate plus its optimality certificate."""

    theta: Theta
    duals: np.ndarray
    support_indices: np.ndarray
    primal_objective: float
    dual_objective: float
    gap: float
    iterations: int
    weight_used: float
    converged: bool


def estimate_class_weight(data: Dataset) -> float:
    """
    Ratio of sample class proportions, P(Y=1)/P(Y=-1).

    Raises:
        MissingClassError: If either class is absent
    """
    if not data.has_both_classes():
        raise MissingClassError("the class weight needs both labels in the sample")
    return data.n_positive / data.n_negative


def _resolve_weight(data: Dataset, config: SvmConfig) -> float:
    if config.weight_mode == WEIGHT_AUTO:
        return estimate_class_weight(data)
    if config.weight_mode == WEIGHT_FIXED:
        return float(config.weight)
    return 1.0


def _observation_weights(labels: np.ndarray, weight: float) -> np.ndarray:
    return np.where(labels > 0, 1.0, weight)


def _check_theta(theta: Theta, data: Dataset) -> None:
    if theta.m != data.m:
        raise DimensionMismatchError(f"theta has {theta.m} slopes, data has {data.m} covariates")


def svm_primal_objective(theta: Theta, data: Dataset, config: SvmConfig,
                         weight: Optional[float] = None) -> float:
    """
    Evaluate the (class-weighted) sample SVM objective Q_n at theta.

    Args:
        theta (Theta): Parameter at which to evaluate
        data (Dataset): Sample
        config (SvmConfig): Supplies lambda and the weight mode
        weight (float, optional): Overrides the weight implied by the config

    Returns:
        float: (1/n) sum w_i hinge_i + (lambda/n) ||beta||^2
    """
    _check_theta(theta, data)
    w = _resolve_weight(data, config) if weight is None else weight
    margins = data.labels * (theta.alpha + data.covariates @ theta.beta)
    hinge = np.maximum(0.0, 1.0 - margins)
    weights = _observation_weights(data.labels, w)
    return float(weights @ hinge / data.n + config.lambda_ / data.n * (theta.beta @ theta.beta))


def svm_objective_gradient(theta: Theta, data: Dataset, config: SvmConfig,
                           weight: Optional[float] = None) -> np.ndarray:
    """
    Gradient of Q_n where no observation sits on its margin.

    Sample analogue of -E 1{1 - Y(alpha + X'beta) > 0} Y (1, X')' plus the
    ridge term (0, 2 lambda beta / n). At kinks this is one element of the
    subdifferential.
    """
    _check_theta(theta, data)
    w = _resolve_weight(data, config) if weight is None else weight
    y = data.labels
    active = (1.0 - y * (theta.alpha + data.covariates @ theta.beta)) > 0
    coefficient = _observation_weights(y, w) * active * y
    gradient = -(data.design_matrix().T @ coefficient) / data.n
    gradient[1:] += 2.0 * config.lambda_ / data.n * theta.beta
    return gradient


def _intercept(residual: np.ndarray, duals: np.ndarray, upper: np.ndarray, y: np.ndarray) -> float:
    """
    Intercept from the KKT conditions.

    residual holds y_i - x_i'beta. Free support vectors pin alpha exactly;
    without any, every alpha in [max lower bound, min upper bound] satisfies
    the KKT conditions and the midpoint is returned.
    """
    at_zero = duals <= _BOUND_EPS * upper
    at_upper = duals >= upper * (1.0 - _BOUND_EPS)
    free = ~(at_zero | at_upper)
    if free.any():
        return float(residual[free].mean())

    lower_side = (at_zero & (y > 0)) | (at_upper & (y < 0))
    upper_side = (at_zero & (y < 0)) | (at_upper & (y > 0))
    lower = residual[lower_side].max() if lower_side.any() else -np.inf
    upper_bound = residual[upper_side].min() if upper_side.any() else np.inf
    if np.isfinite(lower) and np.isfinite(upper_bound):
        return float(0.5 * (lower + upper_bound))
    if np.isfinite(lower):
        return float(lower)
    if np.isfinite(upper_bound):
        return float(upper_bound)
    return 0.0


def _working_pair(y: np.ndarray, grad: np.ndarray, signed: np.ndarray,
                  lo: np.ndarray, hi: np.ndarray) -> Tuple[int, int, float]:
    """Maximal violating pair; ties go to the lowest index. Violation 0 means optimal."""
    score = y * grad
    can_rise = signed < hi
    can_fall = signed > lo
    i = int(np.argmax(np.where(can_rise, score, -np.inf)))
    j = int(np.argmin(np.where(can_fall, score, np.inf)))
    if not (can_rise[i] and can_fall[j]):
        return i, j, 0.0
    return i, j, float(max(0.0, score[i] - score[j]))


def _certificate(X: np.ndarray, y: np.ndarray, signed: np.ndarray, beta: np.ndarray,
                 upper: np.ndarray, weights: np.ndarray, lambda_: float) -> Tuple[float, float, float, float]:
    """Return (alpha, primal, dual, gap) on the Q_n scale for the current duals."""
    n = y.shape[0]
    duals = signed * y
    index_wo_alpha = X @ beta
    alpha = _intercept(y - index_wo_alpha, duals, upper, y)
    hinge = np.maximum(0.0, 1.0 - y * (alpha + index_wo_alpha))
    penalty = beta @ beta
    primal = weights @ hinge / n + lambda_ / n * penalty
    dual = (duals.sum() - 0.5 * penalty) * 2.0 * lambda_ / n
    return alpha, float(primal), float(dual), float(primal - dual)


def svm_fit(data: Dataset, config: Optional[SvmConfig] = None,
            trace: Optional[TextIO] = None) -> SvmFit:
    """
    Fit the soft-margin SVM by SMO on the dual.

    Args:
        data (Dataset): Sample with both labels present
        config (SvmConfig, optional): Defaults to lambda = 1/2, no weighting
        trace (TextIO, optional): Receives CSV rows (iteration, primal, dual,
            gap) at every convergence check

    Returns:
        SvmFit: The estimate; converged is False when max_iter ran out first

    Raises:
        MissingClassError: If one of the labels is absent
    """
    config = config or SvmConfig()
    if not data.has_both_classes():
        raise MissingClassError("svm_fit needs both labels in the sample")

    weight = _resolve_weight(data, config)
    X = data.covariates
    y = data.labels
    weights = _observation_weights(y, weight)
    upper = weights / (2.0 * config.lambda_)

    # work with signed duals s_i = y_i a_i, boxed in [lo_i, hi_i]
    lo = np.where(y > 0, 0.0, -upper)
    hi = np.where(y > 0, upper, 0.0)
    signed = np.zeros(data.n)
    beta = np.zeros(data.m)
    grad = np.ones(data.n)

    writer = None
    if trace is not None:
        writer = csv.writer(trace, lineterminator="\n")
        writer.writerow(TRACE_HEADER)

    converged = False
    certificate = None
    iteration = 0
    while True:
        i, j, violation = _working_pair(y, grad, signed, lo, hi)
        if violation <= config.tol or iteration % config.check_every == 0 or iteration >= config.max_iter:
            # refresh accumulated quantities before certifying
            beta = X.T @ signed
            grad = 1.0 - y * (X @ beta)
            i, j, violation = _working_pair(y, grad, signed, lo, hi)
            certificate = _certificate(X, y, signed, beta, upper, weights, config.lambda_)
            if writer is not None:
                writer.writerow([iteration, repr(certificate[1]), repr(certificate[2]), repr(certificate[3])])
            if certificate[3] <= config.tol and violation <= config.tol:
                converged = True
                break
            if violation <= 0.0 or iteration >= config.max_iter:
                break

        direction = X[i] - X[j]
        curvature = float(direction @ direction)
        room_i = hi[i] - signed[i]
        room_j = signed[j] - lo[j]
        newton = violation / curvature if curvature > 0.0 else np.inf
        step = min(room_i, room_j, newton)

        signed[i] = hi[i] if step == room_i else min(hi[i], signed[i] + step)
        signed[j] = lo[j] if step == room_j else max(lo[j], signed[j] - step)
        beta += step * direction
        grad -= step * y * (X @ direction)
        iteration += 1

    alpha, primal, dual, gap = certificate
    duals = signed * y
    fit = SvmFit(
        theta=Theta(alpha=alpha, beta=beta),
        duals=duals,
        support_indices=np.flatnonzero(duals > 0.0),
        primal_objective=primal,
        dual_objective=dual,
        gap=gap,
        iterations=iteration,
        weight_used=float(weight),
        converged=converged,
    )
    if converged:
        logger.debug("SVM converged after %d updates (gap %.3g)", iteration, gap)
    else:
        logger.warning("SVM stopped after %d updates without reaching gap %.1e (gap %.3g)",
                       iteration, config.tol, gap)
    return fit


def kkt_violation(fit: SvmFit, data: Dataset, config: SvmConfig) -> float:
    """
    Largest KKT excess beyond the tolerance band.

    a_i = 0 requires margin >= 1 - tol, a_i = C_i requires margin <= 1 + tol,
    interior a_i requires |margin - 1| <= tol.
    """
    _check_theta(fit.theta, data)
    y = data.labels
    upper = _observation_weights(y, fit.weight_used) / (2.0 * config.lambda_)
    duals = np.asarray(fit.duals, dtype=np.float64)
    margins = y * (fit.theta.alpha + data.covariates @ fit.theta.beta)

    at_zero = duals <= _BOUND_EPS * upper
    at_upper = duals >= upper * (1.0 - _BOUND_EPS)
    free = ~(at_zero | at_upper)

    excess = np.zeros(data.n)
    excess[at_zero] = (1.0 - config.tol) - margins[at_zero]
    excess[at_upper] = margins[at_upper] - (1.0 + config.tol)
    excess[free] = np.abs(margins[free] - 1.0) - config.tol
    return float(max(0.0, excess.max()))
