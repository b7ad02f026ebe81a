"""
Monte Carlo harness for the binary choice estimators.

Generates samples from the two simulation designs, fits the requested
estimators on every replication and summarizes the rescaled slope
beta_1 / beta_2 by mean bias, mean absolute deviation and RMSE. Replication r
of a study with master seed s always draws from stream (s, r), and the
reduction runs in replication order, so results do not depend on how many
worker processes executed the study.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np
import pandas as pd
from scipy.stats import norm

from estimators.inference import sandwich_covariance
from estimators.intercept_maxscore import maxscore_intercept
from estimators.qmle_logit import LogitConfig, logit_fit
from estimators.svm_solver import WEIGHT_AUTO, SvmConfig, SvmFit, svm_fit
from models.errors import (
    BinaryChoiceError,
    DegenerateEstimateError,
    InvalidConfigError,
    NonConvergenceError,
)
from models.model_core import FLOAT_FORMAT, Dataset, RngSeed, Theta, rescaled_slope

logger = logging.getLogger(__name__)

TABLE1 = "table1"
TABLE2 = "table2"
DGP_KINDS = (TABLE1, TABLE2)

SVM = "svm"
WSVM = "wsvm"
LOGIT = "logit"
SVM_MS = "svm_ms"
ESTIMATORS = (SVM, WSVM, LOGIT, SVM_MS)

SUMMARY_COLUMNS = ["estimator", "dgp", "param", "n", "nsim", "failures", "mean_bias", "mean_abs_dev", "rmse"]

_SQRT_HALF = math.sqrt(0.5)


@dataclass(frozen=True)
class DgpSpec:
    """
    A simulation design.

    table1: Y = sgn(alpha + (X1 + X2)/sqrt(2) - U) with X1, X2, U iid N(0,1).
    table2: Y = sgn(1/2 + X2 - U) with X1, U ~ N(0,1) and X2 the equal
    mixture of N(-mu,1) and N(mu,1) scaled to unit variance.

    Attributes:
        kind (str): 'table1' or 'table2'
        param (float): alpha for table1, mu for table2
        n (int): Sample size
    """

    kind: str
    param: float
    n: int

    def __post_init__(self):
        if self.kind not in DGP_KINDS:
            raise InvalidConfigError(f"unknown design {self.kind!r}; choose from {DGP_KINDS}")
        if not math.isfinite(self.param):
            raise InvalidConfigError("the design parameter must be finite")
        if self.kind == TABLE2 and self.param < 0:
            raise InvalidConfigError(f"table2 needs mu >= 0, got {self.param}")
        if int(self.n) < 2:
            raise InvalidConfigError(f"sample size must be at least 2, got {self.n}")
        object.__setattr__(self, "param", float(self.param))
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def table1(cls, alpha: float, n: int) -> "DgpSpec":
        return cls(kind=TABLE1, param=alpha, n=n)

    @classmethod
    def table2(cls, mu: float, n: int) -> "DgpSpec":
        return cls(kind=TABLE2, param=mu, n=n)

    def true_theta(self) -> Theta:
        if self.kind == TABLE1:
            return Theta(alpha=self.param, beta=[_SQRT_HALF, _SQRT_HALF])
        return Theta(alpha=0.5, beta=[0.0, 1.0])

    def true_rescaled_slope(self) -> float:
        return rescaled_slope(self.true_theta(), 0, 1)

    def true_normalized_intercept(self) -> float:
        theta = self.true_theta()
        return theta.alpha / float(np.linalg.norm(theta.beta))


@dataclass(frozen=True)
class SimulationConfig:
    """Estimator settings and parallelism shared by every replication of a study."""

    svm: SvmConfig = field(default_factory=SvmConfig)
    logit: LogitConfig = field(default_factory=LogitConfig)
    workers: int = 1

    def __post_init__(self):
        if self.workers < 1:
            raise InvalidConfigError(f"workers must be at least 1, got {self.workers}")


@dataclass(frozen=True)
class SimSummary:
    estimator: str
    dgp: str
    param: float
    n: int
    nsim: int
    nsim_completed: int
    failures: int
    mean_bias: float
    mean_abs_dev: float
    rmse: float

    def to_row(self) -> dict:
        return {column: getattr(self, column) for column in SUMMARY_COLUMNS}


@dataclass(frozen=True)
class CoverageResult:
    """Share of replications whose nominal interval for beta_1 covers the mean of beta_1 hat."""

    nominal: float
    coverage: float
    target: float
    nsim_completed: int
    failures: int


def generate_sample(spec: DgpSpec, seed: RngSeed) -> Dataset:
    """
    Draw one sample of the design from the stream identified by seed.

    Args:
        spec (DgpSpec): Design and sample size
        seed (RngSeed): Stream (master_seed, replication index)

    Returns:
        Dataset: n observations with two covariates
    """
    rng = seed.generator()
    n = spec.n
    if spec.kind == TABLE1:
        x = rng.standard_normal((n, 2))
        u = rng.standard_normal(n)
        index = spec.param + (x[:, 0] + x[:, 1]) * _SQRT_HALF - u
    else:
        mu = spec.param
        x1 = rng.standard_normal(n)
        component = np.where(rng.integers(0, 2, size=n) == 1, 1.0, -1.0)
        z = component * mu + rng.standard_normal(n)
        x = np.column_stack([x1, z / math.sqrt(1.0 + mu * mu)])
        u = rng.standard_normal(n)
        index = 0.5 + x[:, 1] - u
    labels = np.where(index >= 0.0, 1.0, -1.0)
    return Dataset(labels=labels, covariates=x)


def summarize(estimates: Sequence[float], true_value: float) -> Dict[str, float]:
    """
    Mean bias, mean absolute deviation and RMSE of estimates around true_value.

    Raises:
        InvalidConfigError: If estimates is empty or holds non-finite values
    """
    values = np.asarray(list(estimates), dtype=np.float64)
    if values.size == 0:
        raise InvalidConfigError("cannot summarize an empty set of estimates")
    if not np.all(np.isfinite(values)):
        raise InvalidConfigError("estimates must be finite")
    deviation = values - true_value
    return {
        "mean_bias": float(np.mean(values) - true_value),
        "mean_abs_dev": float(np.mean(np.abs(deviation))),
        "rmse": float(np.sqrt(np.mean(deviation * deviation))),
    }


def _converged_svm(data: Dataset, config: SvmConfig) -> SvmFit:
    fit = svm_fit(data, config)
    if not fit.converged:
        raise NonConvergenceError(f"SVM did not converge (gap {fit.gap:.3g})")
    return fit


def _estimate(tag: str, data: Dataset, config: SimulationConfig, fits: Dict[str, SvmFit]) -> float:
    """Scalar summary statistic of one estimator on one sample."""
    if tag in (SVM, SVM_MS):
        if SVM not in fits:
            fits[SVM] = _converged_svm(data, config.svm)
        fit = fits[SVM]
        if tag == SVM:
            return rescaled_slope(fit.theta, 0, 1)
        scale = float(np.linalg.norm(fit.theta.beta))
        if scale == 0.0:
            raise DegenerateEstimateError("zero first-stage slope; the intercept cannot be normalized")
        return maxscore_intercept(data, fit.theta.beta).alpha_ms / scale
    if tag == WSVM:
        weighted = replace(config.svm, weight_mode=WEIGHT_AUTO, weight=None)
        return rescaled_slope(_converged_svm(data, weighted).theta, 0, 1)
    if tag == LOGIT:
        fit = logit_fit(data, config.logit)
        if not fit.converged:
            raise NonConvergenceError("logit did not converge" + (" (separation)" if fit.separated else ""))
        return rescaled_slope(fit.theta, 0, 1)
    raise InvalidConfigError(f"unknown estimator {tag!r}")


def _replicate(args: Tuple[DgpSpec, Tuple[str, ...], int, int, SimulationConfig]) -> Dict[str, Optional[float]]:
    """
    Run one replication in a worker process.

    Must be at module level so ProcessPoolExecutor can pickle it. A failed
    estimator yields None for that estimator only.
    """
    spec, tags, master_seed, index, config = args
    data = generate_sample(spec, RngSeed(master_seed, index))
    fits: Dict[str, SvmFit] = {}
    results: Dict[str, Optional[float]] = {}
    for tag in tags:
        try:
            results[tag] = _estimate(tag, data, config, fits)
        except BinaryChoiceError as e:
            logger.debug("Replication %d: %s failed: %s", index, tag, e)
            results[tag] = None
    return results


def _run_replications(worker, tasks: List[tuple], workers: int) -> List:
    if workers > 1 and len(tasks) > 1:
        chunksize = max(1, len(tasks) // (workers * 4))
        with ProcessPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(worker, tasks, chunksize=chunksize))
    return [worker(task) for task in tasks]


def _normalize_tags(estimators: Iterable[str]) -> Tuple[str, ...]:
    tags = tuple(dict.fromkeys(str(tag).strip() for tag in estimators))
    if not tags:
        raise InvalidConfigError("at least one estimator is required")
    unknown = [tag for tag in tags if tag not in ESTIMATORS]
    if unknown:
        raise InvalidConfigError(f"unknown estimator(s) {unknown}; choose from {ESTIMATORS}")
    return tags


def run_simulation(
    spec: DgpSpec,
    estimators: Iterable[str],
    nsim: int,
    master_seed: int = 0,
    config: Optional[SimulationConfig] = None,
) -> List[SimSummary]:
    """
    Replicate spec nsim times and summarize each estimator.

    Args:
        spec (DgpSpec): Design
        estimators (Iterable[str]): Tags among 'svm', 'wsvm', 'logit', 'svm_ms'
        nsim (int): Number of replications
        master_seed (int): Seed of the study; replication r uses stream r
        config (SimulationConfig, optional): Estimator settings and workers

    Returns:
        List[SimSummary]: One summary per estimator, in the order requested
    """
    config = config or SimulationConfig()
    tags = _normalize_tags(estimators)
    if nsim < 1:
        raise InvalidConfigError(f"nsim must be at least 1, got {nsim}")

    logger.info("Simulating %s(%g), n=%d, nsim=%d, estimators=%s, workers=%d",
                spec.kind, spec.param, spec.n, nsim, ",".join(tags), config.workers)
    tasks = [(spec, tags, master_seed, r, config) for r in range(nsim)]
    replications = _run_replications(_replicate, tasks, config.workers)

    summaries = []
    for tag in tags:
        values = [result[tag] for result in replications if result[tag] is not None]
        failures = nsim - len(values)
        truth = spec.true_normalized_intercept() if tag == SVM_MS else spec.true_rescaled_slope()
        if values:
            moments = summarize(values, truth)
        else:
            moments = {"mean_bias": math.nan, "mean_abs_dev": math.nan, "rmse": math.nan}
        if failures:
            logger.warning("%s: %d of %d replications failed", tag, failures, nsim)
        summaries.append(
            SimSummary(
                estimator=tag,
                dgp=spec.kind,
                param=spec.param,
                n=spec.n,
                nsim=nsim,
                nsim_completed=len(values),
                failures=failures,
                **moments,
            )
        )
    return summaries


def run_grid(
    kind: str,
    params: Sequence[float],
    sample_sizes: Sequence[int],
    estimators: Iterable[str],
    nsim: int,
    master_seed: int = 0,
    config: Optional[SimulationConfig] = None,
) -> List[SimSummary]:
    """Run every (param, n) cell of a table; rows ordered by param, then n, then estimator."""
    tags = _normalize_tags(estimators)
    summaries: List[SimSummary] = []
    for param in params:
        for n in sample_sizes:
            summaries.extend(run_simulation(DgpSpec(kind, param, n), tags, nsim, master_seed, config))
    return summaries


def _coverage_replicate(args: Tuple[DgpSpec, int, int, SimulationConfig]) -> Optional[Tuple[float, float]]:
    spec, master_seed, index, config = args
    data = generate_sample(spec, RngSeed(master_seed, index))
    try:
        fit = _converged_svm(data, config.svm)
        estimate = sandwich_covariance(data, fit)
    except BinaryChoiceError as e:
        logger.debug("Coverage replication %d failed: %s", index, e)
        return None
    return float(fit.theta.beta[0]), float(estimate.standard_errors()[1])


def coverage_study(
    spec: DgpSpec,
    nsim: int,
    master_seed: int = 0,
    config: Optional[SimulationConfig] = None,
    nominal: float = 0.95,
) -> CoverageResult:
    """
    Coverage of the sandwich interval for the first slope of the plain SVM.

    The target is the replication mean of beta_1 hat, since the SVM slope is
    consistent for a positive multiple of the true slope only.
    """
    config = config or SimulationConfig()
    if nsim < 1:
        raise InvalidConfigError(f"nsim must be at least 1, got {nsim}")
    if not 0 < nominal < 1:
        raise InvalidConfigError(f"nominal level must lie in (0, 1), got {nominal}")

    tasks = [(spec, master_seed, r, config) for r in range(nsim)]
    results = [result for result in _run_replications(_coverage_replicate, tasks, config.workers)
               if result is not None]
    if not results:
        return CoverageResult(nominal, math.nan, math.nan, 0, nsim)

    slopes = np.array([slope for slope, _ in results])
    errors = np.array([se for _, se in results])
    target = float(np.mean(slopes))
    critical = float(norm.ppf(0.5 + nominal / 2.0))
    covered = np.abs(slopes - target) <= critical * errors
    coverage = float(np.mean(covered))
    logger.info("Coverage %.3f at nominal %.2f over %d replications", coverage, nominal, len(results))
    return CoverageResult(
        nominal=nominal,
        coverage=coverage,
        target=target,
        nsim_completed=len(results),
        failures=nsim - len(results),
    )


def summaries_to_frame(summaries: Iterable[SimSummary]) -> pd.DataFrame:
    return pd.DataFrame([summary.to_row() for summary in summaries], columns=SUMMARY_COLUMNS)


def write_summaries(summaries: Iterable[SimSummary], sink: Union[TextIO, str]) -> None:
    """CSV with header SUMMARY_COLUMNS and round-trip float precision."""
    summaries_to_frame(summaries).to_csv(sink, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
