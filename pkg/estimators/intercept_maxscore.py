"""
Second-stage maximum score estimation of the intercept.

Given a first-stage slope beta, the score

    Q(alpha) = (1/n) sum_i y_i 1{alpha + beta'x_i >= 0}

is a right-continuous step function of alpha that only changes at the
breakpoints alpha = -beta'x_i, so it is maximized exactly by enumeration.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from models.errors import DimensionMismatchError, InvalidConfigError
from models.model_core import Dataset

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MaxScoreResult:
    """
    Attributes:
        alpha_ms (float): Midpoint of the leftmost maximizing interval
        optimal_interval (Tuple[float, float]): [lower, upper) clipped to A
        score (float): Objective value at alpha_ms
        breakpoint_count (int): Distinct breakpoints inside A
    """

    alpha_ms: float
    optimal_interval: Tuple[float, float]
    score: float
    breakpoint_count: int

    def to_dict(self) -> dict:
        return {
            "alpha_ms": self.alpha_ms,
            "optimal_interval": list(self.optimal_interval),
            "score": self.score,
            "breakpoint_count": self.breakpoint_count,
        }


def _index(beta: np.ndarray, data: Dataset) -> np.ndarray:
    beta = np.asarray(beta, dtype=np.float64).reshape(-1)
    if beta.shape[0] != data.m:
        raise DimensionMismatchError(f"beta has {beta.shape[0]} entries, data has {data.m} covariates")
    return data.covariates @ beta


def maxscore_objective(alpha: float, beta: np.ndarray, data: Dataset) -> float:
    """Sample average of y_i 1{alpha + beta'x_i >= 0}."""
    index = _index(beta, data)
    return float(np.sum(data.labels[alpha + index >= 0.0]) / data.n)


def default_alpha_range(beta: np.ndarray) -> Tuple[float, float]:
    """Scale-aware compact search set [-10(1 + |beta|), 10(1 + |beta|)]."""
    half_width = 10.0 * (1.0 + float(np.linalg.norm(beta)))
    return -half_width, half_width


def maxscore_intercept(
    data: Dataset, beta: np.ndarray, alpha_range: Optional[Tuple[float, float]] = None
) -> MaxScoreResult:
    """
    Maximize the intercept score exactly over A = [a_lo, a_hi].

    Args:
        data (Dataset): Sample
        beta (np.ndarray): First-stage slope
        alpha_range (Tuple[float, float], optional): A; defaults to
            default_alpha_range(beta)

    Returns:
        MaxScoreResult: Leftmost maximizing interval and its midpoint
    """
    beta = np.asarray(beta, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(beta)):
        raise InvalidConfigError("beta must be finite")
    a_lo, a_hi = alpha_range if alpha_range is not None else default_alpha_range(beta)
    a_lo, a_hi = float(a_lo), float(a_hi)
    if not (np.isfinite(a_lo) and np.isfinite(a_hi) and a_lo < a_hi):
        raise InvalidConfigError(f"alpha range must satisfy a_lo < a_hi, got [{a_lo}, {a_hi}]")

    breakpoints = -_index(beta, data)
    order = np.argsort(breakpoints, kind="stable")
    sorted_points = breakpoints[order]
    # running label sum; integer valued, so ties between pieces compare exactly
    running = np.concatenate([[0.0], np.cumsum(data.labels[order])])

    inside = np.unique(sorted_points[(sorted_points > a_lo) & (sorted_points <= a_hi)])
    starts = np.concatenate([[a_lo], inside])
    ends = np.concatenate([inside, [a_hi]])
    counts = running[np.searchsorted(sorted_points, starts, side="right")]

    best = counts.max()
    first = int(np.flatnonzero(counts == best)[0])
    last = first
    while last + 1 < len(counts) and counts[last + 1] == best:
        last += 1

    lower, upper = float(starts[first]), float(ends[last])
    alpha_ms = 0.5 * (lower + upper)
    score = maxscore_objective(alpha_ms, beta, data)
    logger.debug("Max score interval [%g, %g) with score %g over %d breakpoints",
                 lower, upper, score, len(inside))
    return MaxScoreResult(
        alpha_ms=alpha_ms,
        optimal_interval=(lower, upper),
        score=score,
        breakpoint_count=int(len(inside)),
    )
