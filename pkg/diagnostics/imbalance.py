"""
Non-severe imbalance diagnostics for the population SVM.

For an index V with choice probability Pi(v) = P(Y=1 | V=v) and density f,

    p(v) = E Pi(V) 1{V < v}            q(v) = E (1 - Pi(V)) 1{V > v}
    tau(v) = E V Pi(V) 1{V < v}        sigma(v) = E V (1 - Pi(V)) 1{V > v}

The unweighted SVM slope is consistent only when tau(v_bar) > sigma(-inf),
where p(v_bar) = q(-inf). Equivalently the restricted population objective

    Q(c, r) = E[Pi(V) (1 - cV - r)_+ + (1 - Pi(V)) (1 + cV + r)_+]

has a minimizer with c > 0. Both criteria are evaluated by quadrature and
cross-checked against each other.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Tuple, Type

import numpy as np
import pandas as pd
from scipy.optimize import bisect, minimize
from scipy.special import ndtr

from models.errors import InternalConsistencyError, InvalidConfigError

from .quadrature import integrate

logger = logging.getLogger(__name__)

TRUNCATION = 10.0
VBAR_XTOL = 1e-10
THRESHOLD_XTOL = 1e-6
C_FLOOR = 1e-4
GRADIENT_TOL = 1e-8
CONSISTENCY_TOL = 1e-6
_BALANCE_TOL = 1e-12
_POLISH_STEPS = 30
_SQRT_2PI = math.sqrt(2.0 * math.pi)

FIGURE1_COLUMNS = ["mu", "tau_vbar", "sigma_neginf", "prob_y1", "condition_holds", "c_star", "r_star"]


def _phi(x: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * np.square(x)) / _SQRT_2PI


def pi_v(v: float) -> float:
    """P(Y=1 | V=v) = Phi(v) when U ~ N(0,1) is independent of V."""
    return float(ndtr(v))


def class_prob(mu: float) -> float:
    """P(Y=1) = Phi(mu / sqrt(2)) in the Gaussian illustration, since V - U ~ N(mu, 2)."""
    return float(ndtr(mu / math.sqrt(2.0)))


class IndexModel(ABC):
    """Distribution of the index V together with its choice probability."""

    label = "custom"

    @abstractmethod
    def choice_prob(self, v: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def density(self, v: np.ndarray) -> np.ndarray:
        pass

    @property
    @abstractmethod
    def lower(self) -> float:
        """Truncation point standing in for -infinity"""

    @property
    @abstractmethod
    def upper(self) -> float:
        """Truncation point standing in for +infinity"""

    def _clip(self, v: float) -> float:
        return min(max(float(v), self.lower), self.upper)

    def p(self, v: float) -> float:
        return integrate(lambda s: self.choice_prob(s) * self.density(s), self.lower, self._clip(v))

    def q(self, v: float) -> float:
        return integrate(lambda s: (1.0 - self.choice_prob(s)) * self.density(s), self._clip(v), self.upper)

    def tau(self, v: float) -> float:
        return integrate(lambda s: s * self.choice_prob(s) * self.density(s), self.lower, self._clip(v))

    def sigma(self, v: float) -> float:
        return integrate(lambda s: s * (1.0 - self.choice_prob(s)) * self.density(s), self._clip(v), self.upper)

    def prob_y1(self) -> float:
        return self.p(self.upper)

    def oriented(self) -> "IndexModel":
        """The model relabeled (Y -> -Y, V -> -V) when P(Y=1) < 1/2."""
        return ReflectedIndex(self) if self.prob_y1() < 0.5 else self


@dataclass(frozen=True)
class GaussianIllustration(IndexModel):
    """V ~ N(mu, 1), U ~ N(0, 1)"""

    mu: float
    label = "gaussian"

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise InvalidConfigError(f"mu must be finite, got {self.mu}")

    def choice_prob(self, v):
        return ndtr(v)

    def density(self, v):
        return _phi(v - self.mu)

    @property
    def lower(self) -> float:
        return self.mu - TRUNCATION

    @property
    def upper(self) -> float:
        return self.mu + TRUNCATION


@dataclass(frozen=True)
class MixtureIndex(IndexModel):
    """
    V = 1/2 + X2 with X2 = Z / sqrt(1 + mu^2), Z an equal mixture of N(-mu, 1)
    and N(mu, 1); U ~ N(0, 1).
    """

    mu: float
    label = "mixture"

    def __post_init__(self):
        if not (math.isfinite(self.mu) and self.mu >= 0):
            raise InvalidConfigError(f"mixture mu must be finite and nonnegative, got {self.mu}")

    @property
    def scale(self) -> float:
        return math.sqrt(1.0 + self.mu ** 2)

    def choice_prob(self, v):
        return ndtr(v)

    def density(self, v):
        z = self.scale * (np.asarray(v) - 0.5)
        return self.scale * 0.5 * (_phi(z + self.mu) + _phi(z - self.mu))

    @property
    def lower(self) -> float:
        return 0.5 - (self.mu + TRUNCATION) / self.scale

    @property
    def upper(self) -> float:
        return 0.5 + (self.mu + TRUNCATION) / self.scale


@dataclass(frozen=True)
class ReflectedIndex(IndexModel):
    """The base model seen through Y -> -Y, V -> -V."""

    base: IndexModel

    @property
    def label(self) -> str:
        return self.base.label

    @property
    def mu(self) -> float:
        return getattr(self.base, "mu", float("nan"))

    def choice_prob(self, v):
        return 1.0 - self.base.choice_prob(-np.asarray(v))

    def density(self, v):
        return self.base.density(-np.asarray(v))

    @property
    def lower(self) -> float:
        return -self.base.upper

    @property
    def upper(self) -> float:
        return -self.base.lower


INDEX_MODELS: Dict[str, Type[IndexModel]] = {
    GaussianIllustration.label: GaussianIllustration,
    MixtureIndex.label: MixtureIndex,
}


def index_model(mu: float, kind: str = GaussianIllustration.label) -> IndexModel:
    try:
        return INDEX_MODELS[kind](mu)
    except KeyError:
        raise InvalidConfigError(f"unknown index model {kind!r}; choose from {sorted(INDEX_MODELS)}") from None


def p_fun(v: float, mu: float) -> float:
    return GaussianIllustration(mu).p(v)


def q_fun(v: float, mu: float) -> float:
    return GaussianIllustration(mu).q(v)


def tau_fun(v: float, mu: float) -> float:
    return GaussianIllustration(mu).tau(v)


def sigma_fun(v: float, mu: float) -> float:
    return GaussianIllustration(mu).sigma(v)


def v_bar(mu: float, model: Optional[IndexModel] = None) -> float:
    """
    Root of p(v) = q(-inf), or +inf when the classes are balanced.

    Args:
        mu (float): Gaussian illustration mean, ignored when model is given
        model (IndexModel, optional): Index model already oriented so that
            P(Y=1) >= 1/2

    Returns:
        float: v_bar, possibly math.inf
    """
    model = model or GaussianIllustration(mu).oriented()
    target = model.q(model.lower)
    if model.p(model.upper) <= target + _BALANCE_TOL:
        return math.inf
    root = bisect(lambda v: model.p(v) - target, model.lower, model.upper, xtol=VBAR_XTOL)
    logger.debug("v_bar = %.10g for %s model", root, model.label)
    return float(root)


@dataclass(frozen=True)
class RestrictedMinimizer:
    c_star: float
    r_star: float
    exists: bool
    objective: float
    gradient_norm: float


def restricted_objective(model: IndexModel, c: float, r: float) -> Tuple[float, np.ndarray]:
    """
    Q(c, r) and its gradient with respect to (c, r), for c > 0.

    With v1 = (1 - r)/c and v2 = (-1 - r)/c the hinge expectations reduce to
    Q = (1 - r) p(v1) - c tau(v1) + (1 + r) q(v2) + c sigma(v2).
    """
    v1, v2 = (1.0 - r) / c, (-1.0 - r) / c
    p1, t1 = model.p(v1), model.tau(v1)
    q2, s2 = model.q(v2), model.sigma(v2)
    value = (1.0 - r) * p1 - c * t1 + (1.0 + r) * q2 + c * s2
    return value, np.array([-t1 + s2, -p1 + q2])


def restricted_hessian(model: IndexModel, c: float, r: float) -> np.ndarray:
    v1, v2 = (1.0 - r) / c, (-1.0 - r) / c
    w1 = float(model.choice_prob(v1) * model.density(v1)) / c
    w2 = float((1.0 - model.choice_prob(v2)) * model.density(v2)) / c
    return w1 * np.array([[v1 * v1, v1], [v1, 1.0]]) + w2 * np.array([[v2 * v2, v2], [v2, 1.0]])


def restricted_population_minimizer(mu: float, model: Optional[IndexModel] = None) -> RestrictedMinimizer:
    """
    Minimize Q(c, r) over c >= 1e-4 starting from (1, 0).

    A bounded quasi-Newton descent is followed by a Newton polish. The
    minimizer exists (c* > 0) when the result is interior with gradient norm
    at most 1e-8; a descent that stalls on the floor c = 1e-4 reports
    exists = False.
    """
    model = model or GaussianIllustration(mu).oriented()

    def fun(x: np.ndarray) -> Tuple[float, np.ndarray]:
        return restricted_objective(model, x[0], x[1])

    result = minimize(
        fun,
        x0=np.array([1.0, 0.0]),
        jac=True,
        method="L-BFGS-B",
        bounds=[(C_FLOOR, None), (None, None)],
        options={"ftol": 0.0, "gtol": 1e-12, "maxiter": 500},
    )
    x = np.array(result.x, dtype=np.float64)
    value, grad = fun(x)

    if x[0] > C_FLOOR:
        for _ in range(_POLISH_STEPS):
            if np.linalg.norm(grad) <= 0.01 * GRADIENT_TOL:
                break
            try:
                step = np.linalg.solve(restricted_hessian(model, x[0], x[1]), -grad)
            except np.linalg.LinAlgError:
                break
            candidate = x + step
            if candidate[0] <= C_FLOOR:
                break
            cand_value, cand_grad = fun(candidate)
            if cand_value > value + 1e-12 or np.linalg.norm(cand_grad) >= np.linalg.norm(grad):
                break
            x, value, grad = candidate, cand_value, cand_grad

    gradient_norm = float(np.linalg.norm(grad))
    exists = bool(x[0] > C_FLOOR and gradient_norm <= GRADIENT_TOL)
    logger.debug("Restricted minimizer at c=%.6g r=%.6g (|grad| %.2e, exists=%s)",
                 x[0], x[1], gradient_norm, exists)
    return RestrictedMinimizer(
        c_star=float(x[0]),
        r_star=float(x[1]),
        exists=exists,
        objective=float(value),
        gradient_norm=gradient_norm,
    )


@dataclass(frozen=True)
class DiagnosticReport:
    """
    Attributes:
        mu (float): Parameter of the index model
        v_bar (float): Root of p(v) = q(-inf), math.inf when balanced
        tau_at_vbar (float): tau(v_bar)
        sigma_at_neg_inf (float): sigma(-inf)
        condition_holds (bool): tau(v_bar) > sigma(-inf)
        prob_y1 (float): P(Y=1) of the model as given
        c_star (float, optional): Restricted minimizer slope, when it exists
        r_star (float, optional): Restricted minimizer intercept, when it exists
        index_model (str): 'gaussian' or 'mixture'
        reflected (bool): True when the labels were flipped so P(Y=1) >= 1/2
    """

    mu: float
    v_bar: float
    tau_at_vbar: float
    sigma_at_neg_inf: float
    condition_holds: bool
    prob_y1: float
    c_star: Optional[float] = None
    r_star: Optional[float] = None
    index_model: str = GaussianIllustration.label
    reflected: bool = False

    def to_row(self) -> dict:
        return {
            "mu": self.mu,
            "tau_vbar": self.tau_at_vbar,
            "sigma_neginf": self.sigma_at_neg_inf,
            "prob_y1": self.prob_y1,
            "condition_holds": self.condition_holds,
            "c_star": self.c_star,
            "r_star": self.r_star,
        }


def check_imbalance_condition(mu: float, kind: str = GaussianIllustration.label) -> DiagnosticReport:
    """
    Evaluate tau(v_bar) > sigma(-inf) and cross-check it against the existence
    of an interior restricted minimizer.

    Args:
        mu (float): Index model parameter
        kind (str): 'gaussian' or 'mixture'

    Returns:
        DiagnosticReport: The verdict with (c*, r*) filled when c* > 0

    Raises:
        InternalConsistencyError: If the two criteria disagree while
            tau(v_bar) and sigma(-inf) differ by more than 1e-6
    """
    raw = index_model(mu, kind)
    prob_y1 = class_prob(mu) if isinstance(raw, GaussianIllustration) else raw.prob_y1()
    model = raw.oriented()

    root = v_bar(mu, model)
    tau_value = model.tau(model.upper if math.isinf(root) else root)
    sigma_value = model.sigma(model.lower)
    holds = bool(tau_value > sigma_value)

    minimizer = restricted_population_minimizer(mu, model)
    if holds != minimizer.exists and abs(tau_value - sigma_value) > CONSISTENCY_TOL:
        raise InternalConsistencyError(
            f"imbalance criteria disagree at mu={mu}: tau(v_bar) - sigma(-inf) = "
            f"{tau_value - sigma_value:.3g} but restricted minimizer exists={minimizer.exists} "
            f"(c={minimizer.c_star:.3g}, |grad|={minimizer.gradient_norm:.2e})"
        )

    return DiagnosticReport(
        mu=float(mu),
        v_bar=root,
        tau_at_vbar=tau_value,
        sigma_at_neg_inf=sigma_value,
        condition_holds=holds,
        prob_y1=prob_y1,
        c_star=minimizer.c_star if minimizer.exists else None,
        r_star=minimizer.r_star if minimizer.exists else None,
        index_model=raw.label,
        reflected=model is not raw,
    )


def imbalance_margin(mu: float, kind: str = GaussianIllustration.label) -> float:
    """tau(v_bar) - sigma(-inf); positive exactly when the condition holds."""
    model = index_model(mu, kind).oriented()
    root = v_bar(mu, model)
    return model.tau(model.upper if math.isinf(root) else root) - model.sigma(model.lower)


def threshold_mu(lo: float = 1.0, hi: float = 2.0, kind: str = GaussianIllustration.label) -> float:
    """
    The mu at which tau(v_bar) - sigma(-inf) changes sign, by bisection on [lo, hi].

    Raises:
        InvalidConfigError: If the margin has the same sign at both ends
    """
    f_lo, f_hi = imbalance_margin(lo, kind), imbalance_margin(hi, kind)
    if np.sign(f_lo) == np.sign(f_hi):
        raise InvalidConfigError(f"the imbalance margin does not change sign on [{lo}, {hi}]")
    root = float(bisect(lambda mu: imbalance_margin(mu, kind), lo, hi, xtol=THRESHOLD_XTOL))
    logger.info("Imbalance threshold mu* = %.6f (%s index)", root, kind)
    return root


def figure1_curve(mu_grid: Iterable[float], kind: str = GaussianIllustration.label) -> pd.DataFrame:
    """One diagnostics row per mu, in the column order of FIGURE1_COLUMNS."""
    grid = np.asarray(list(mu_grid), dtype=np.float64)
    if grid.size == 0 or not np.all(np.isfinite(grid)):
        raise InvalidConfigError("the mu grid must be a nonempty set of finite values")
    if np.any(np.diff(grid) < 0):
        raise InvalidConfigError("the mu grid must be sorted")
    rows = [check_imbalance_condition(mu, kind).to_row() for mu in grid]
    logger.info("Computed %d diagnostics rows", len(rows))
    return pd.DataFrame(rows, columns=FIGURE1_COLUMNS)
