import logging
import os
from typing import Any, Dict, List, Optional, Sequence, Tuple

import pandas as pd

from database.db_manager import DatabaseManager
from diagnostics.imbalance import FIGURE1_COLUMNS, check_imbalance_condition, figure1_curve, threshold_mu
from estimators.inference import sandwich_covariance
from estimators.intercept_maxscore import maxscore_intercept
from estimators.qmle_logit import LogitConfig, logit_fit
from estimators.svm_solver import SvmConfig, svm_fit
from models.errors import InvalidConfigError
from models.model_core import Dataset
from simulation.mc_harness import LOGIT, SVM, WSVM, SimSummary, SimulationConfig, run_grid

logger = logging.getLogger(__name__)

FIT_ESTIMATORS = (SVM, WSVM, LOGIT)


class EstimationWorkflow:
    """Orchestrates estimation, simulation and diagnostics runs for every front end"""

    def __init__(self, results_db: Optional[str] = None):
        db_path = results_db or os.getenv("BCM_RESULTS_DB")
        self.db_manager = DatabaseManager(db_path) if db_path else None

    def run_estimate(
        self,
        data: Dataset,
        estimator: str = SVM,
        svm_config: Optional[SvmConfig] = None,
        logit_config: Optional[LogitConfig] = None,
        intercept_maxscore: bool = False,
        covariance: bool = False,
        alpha_range: Optional[Tuple[float, float]] = None,
    ) -> Dict[str, Any]:
        """
        Fit one estimator and run the requested second stages.

        Args:
            data (Dataset): Sample
            estimator (str): 'svm', 'wsvm' or 'logit'
            svm_config (SvmConfig, optional): Used by svm and wsvm
            logit_config (LogitConfig, optional): Used by logit
            intercept_maxscore (bool): Add the maximum score intercept
            covariance (bool): Add the sandwich covariance (svm only)
            alpha_range (Tuple[float, float], optional): Search set of the
                maximum score step

        Returns:
            Dict[str, Any]: JSON-ready result; 'converged' is False when the
                first stage did not converge, in which case no covariance
                is attached
        """
        if estimator not in FIT_ESTIMATORS:
            raise InvalidConfigError(f"unknown estimator {estimator!r}; choose from {FIT_ESTIMATORS}")
        if covariance and estimator != SVM:
            raise InvalidConfigError("--covariance is only available for the plain svm estimator")

        svm_config = svm_config or SvmConfig()
        if estimator == LOGIT:
            fit = logit_fit(data, logit_config or LogitConfig())
            result = {
                "estimator": estimator,
                "theta": fit.theta.to_dict(),
                "objective": fit.loglik,
                "iterations": fit.iterations,
                "converged": fit.converged,
                "weight_used": None,
                "separated": fit.separated,
            }
        else:
            if estimator == WSVM:
                svm_config = SvmConfig.weighted(
                    lambda_=svm_config.lambda_,
                    tol=svm_config.tol,
                    max_iter=svm_config.max_iter,
                    check_every=svm_config.check_every,
                )
            fit = svm_fit(data, svm_config)
            result = {
                "estimator": estimator,
                "theta": fit.theta.to_dict(),
                "objective": fit.primal_objective,
                "iterations": fit.iterations,
                "converged": fit.converged,
                "weight_used": fit.weight_used,
                "gap": fit.gap,
            }

        if intercept_maxscore:
            second_stage = maxscore_intercept(data, fit.theta.beta, alpha_range)
            result["alpha_ms"] = second_stage.alpha_ms
            result["optimal_interval"] = list(second_stage.optimal_interval)

        if covariance and fit.converged:
            result.update(sandwich_covariance(data, fit).to_dict())

        logger.info("Estimated %s on n=%d (converged=%s)", estimator, data.n, result["converged"])
        return result

    def run_simulation(
        self,
        kind: str,
        params: Sequence[float],
        sample_sizes: Sequence[int],
        estimators: Sequence[str],
        nsim: int,
        master_seed: int = 0,
        workers: int = 1,
        svm_config: Optional[SvmConfig] = None,
    ) -> List[SimSummary]:
        """Run a table grid and record it in the results database when one is configured"""
        config = SimulationConfig(svm=svm_config or SvmConfig(), workers=workers)
        summaries = run_grid(kind, params, sample_sizes, estimators, nsim, master_seed, config)

        if self.db_manager is not None:
            session_id = self.db_manager.save_simulation_session(kind, master_seed, nsim, estimators, summaries)
            if session_id < 0:
                logger.warning("Simulation finished but could not be recorded")
            else:
                logger.info("Recorded simulation session %d", session_id)
        return summaries

    def run_diagnostics(self, mu_values: Sequence[float], kind: str = "gaussian") -> pd.DataFrame:
        if len(mu_values) == 1:
            report = check_imbalance_condition(mu_values[0], kind)
            return pd.DataFrame([report.to_row()], columns=FIGURE1_COLUMNS)
        return figure1_curve(mu_values, kind)

    def run_threshold(self, kind: str = "gaussian") -> float:
        return threshold_mu(kind=kind)

    def _require_db(self) -> DatabaseManager:
        if self.db_manager is None:
            raise InvalidConfigError("no results database configured; set BCM_RESULTS_DB or pass --record-db")
        return self.db_manager

    def get_history(self, limit: int = 10) -> List[Dict[str, Any]]:
        return self._require_db().get_simulation_sessions(limit)

    def get_session(self, session_id: int) -> List[Dict[str, Any]]:
        """Summary rows of one recorded session; unknown ids are an input error"""
        rows = self._require_db().get_session_summaries(session_id)
        if not rows:
            raise InvalidConfigError(f"no recorded rows for session {session_id}")
        return rows

    def get_stats(self) -> Dict[str, Any]:
        return self._require_db().get_database_stats()
