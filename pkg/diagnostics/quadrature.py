"""Adaptive Gauss-Legendre quadrature for smooth vectorized integrands."""

from functools import lru_cache
from typing import Callable, Tuple

import numpy as np

DEFAULT_ORDER = 20
DEFAULT_TOL = 1e-12
MAX_DEPTH = 40
_ROUNDING = 64 * np.finfo(np.float64).eps


@lru_cache(maxsize=8)
def _nodes(order: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def gauss_legendre(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                   order: int = DEFAULT_ORDER) -> float:
    """Fixed-order Gauss-Legendre rule on [a, b]."""
    nodes, weights = _nodes(order)
    half = 0.5 * (b - a)
    return float(half * (weights @ f(half * nodes + 0.5 * (a + b))))


def integrate_adaptive(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float = DEFAULT_TOL,
    order: int = DEFAULT_ORDER,
) -> Tuple[float, float]:
    """
    Adaptive Gauss-Legendre integration by panel bisection.

    A panel is accepted when the rule on the whole panel agrees with the sum
    over its two halves to within the panel's share of the tolerance.

    Args:
        f: Integrand, evaluated on arrays of nodes
        a: Lower bound
        b: Upper bound
        tol: Absolute error tolerance
        order: Nodes per panel

    Returns:
        Tuple of (integral_value, error_estimate).
    """
    if a == b:
        return 0.0, 0.0
    if a > b:
        value, error = integrate_adaptive(f, b, a, tol, order)
        return -value, error

    def _adaptive(lo: float, hi: float, whole: float, depth: int, tol: float) -> Tuple[float, float]:
        mid = 0.5 * (lo + hi)
        left = gauss_legendre(f, lo, mid, order)
        right = gauss_legendre(f, mid, hi, order)
        error = abs(left + right - whole)
        # below this the difference is rounding noise, not truncation error
        floor = _ROUNDING * abs(left + right)
        if depth >= MAX_DEPTH or error <= max(tol, floor):
            return left + right, error
        left_value, left_error = _adaptive(lo, mid, left, depth + 1, 0.5 * tol)
        right_value, right_error = _adaptive(mid, hi, right, depth + 1, 0.5 * tol)
        return left_value + right_value, left_error + right_error

    return _adaptive(a, b, gauss_legendre(f, a, b, order), 0, tol)


def integrate(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
              tol: float = DEFAULT_TOL) -> float:
    return integrate_adaptive(f, a, b, tol)[0]
