import itertools
from typing import Dict

import numpy as np
import pytest

from models.model_core import Dataset, Theta


@pytest.fixture
def two_point() -> Dataset:
    """(y, x) = {(-1, -1), (+1, +1)}; the SVM solution is a = (1/2, 1/2), theta = (0, [1])"""
    return Dataset(labels=[-1.0, 1.0], covariates=[[-1.0], [1.0]])


@pytest.fixture
def six_point() -> Dataset:
    """Fixed overlapping 6-point sample used against the brute-force oracle"""
    return Dataset(
        labels=[1.0, 1.0, 1.0, -1.0, -1.0, -1.0],
        covariates=[
            [2.0, 1.0],
            [0.5, 1.5],
            [-0.5, 0.2],
            [0.3, -0.4],
            [-1.0, -1.0],
            [1.0, -0.5],
        ],
    )


def _kkt_intercept(y, residual, duals, upper, eps=1e-9):
    at_zero = duals <= eps * upper
    at_upper = duals >= upper * (1.0 - eps)
    free = ~(at_zero | at_upper)
    if free.any():
        return float(residual[free].mean())
    lower_side = (at_zero & (y > 0)) | (at_upper & (y < 0))
    upper_side = (at_zero & (y < 0)) | (at_upper & (y > 0))
    lower = residual[lower_side].max() if lower_side.any() else -np.inf
    upper_bound = residual[upper_side].min() if upper_side.any() else np.inf
    if np.isfinite(lower) and np.isfinite(upper_bound):
        return float(0.5 * (lower + upper_bound))
    return float(lower if np.isfinite(lower) else upper_bound)


def brute_force_svm(data: Dataset, lambda_: float = 0.5, weight: float = 1.0) -> Dict[str, object]:
    """
    Solve the SVM dual by enumerating every (zero, free, upper) pattern.

    For each pattern the free duals solve the equality-constrained quadratic
    through its KKT system; the best feasible pattern is the optimum.
    """
    y = data.labels
    X = data.covariates
    n = data.n
    upper = np.where(y > 0, 1.0, weight) / (2.0 * lambda_)
    Q = (y[:, None] * X) @ (y[:, None] * X).T

    best_value, best_duals = -np.inf, None
    for pattern in itertools.product((0, 1, 2), repeat=n):
        pattern = np.array(pattern)
        duals = np.where(pattern == 2, upper, 0.0)
        free = np.flatnonzero(pattern == 1)
        bound = np.flatnonzero(pattern != 1)
        if free.size == 0:
            if abs(y @ duals) > 1e-12:
                continue
        else:
            k = free.size
            kkt = np.zeros((k + 1, k + 1))
            kkt[:k, :k] = Q[np.ix_(free, free)]
            kkt[:k, k] = y[free]
            kkt[k, :k] = y[free]
            rhs = np.concatenate([1.0 - Q[np.ix_(free, bound)] @ duals[bound], [-(y[bound] @ duals[bound])]])
            solution = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
            if not np.allclose(kkt @ solution, rhs, atol=1e-10):
                continue
            candidate = solution[:k]
            if np.any(candidate < -1e-12) or np.any(candidate > upper[free] + 1e-12):
                continue
            duals[free] = np.clip(candidate, 0.0, upper[free])
        value = duals.sum() - 0.5 * duals @ Q @ duals
        if value > best_value + 1e-13:
            best_value, best_duals = value, duals

    beta = X.T @ (best_duals * y)
    alpha = _kkt_intercept(y, y - X @ beta, best_duals, upper)
    return {
        "theta": Theta(alpha=alpha, beta=beta),
        "duals": best_duals,
        "objective": best_value * 2.0 * lambda_ / n,
    }


@pytest.fixture
def qp_oracle():
    return brute_force_svm


def random_dataset(rng: np.random.Generator, n: int, m: int, positive_share: float = 0.5,
                   duplicate: bool = False) -> Dataset:
    """Continuous covariates with both labels present; optionally repeat the first row"""
    n_positive = min(n - 1, max(1, int(round(positive_share * n))))
    labels = np.array([1.0] * n_positive + [-1.0] * (n - n_positive))
    covariates = rng.standard_normal((n, m)) + 0.5 * labels[:, None]
    if duplicate:
        covariates[-1] = covariates[0]
        labels[-1] = labels[0]
        if np.all(labels > 0) or np.all(labels < 0):
            labels[1] = -labels[0]
    return Dataset(labels=labels, covariates=covariates)


@pytest.fixture
def make_dataset():
    return random_dataset
