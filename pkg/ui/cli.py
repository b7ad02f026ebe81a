import argparse
import json
import logging
import math
import os
import sys
from contextlib import contextmanager
from typing import Callable, Iterator, List, Optional, Sequence, TextIO, TypeVar

from diagnostics.imbalance import INDEX_MODELS
from estimation_workflow import FIT_ESTIMATORS, EstimationWorkflow
from estimators.qmle_logit import LogitConfig
from estimators.svm_solver import DEFAULT_LAMBDA, SvmConfig
from models.errors import BinaryChoiceError, InvalidConfigError, NonConvergenceError
from models.model_core import FLOAT_FORMAT, load_csv
from simulation.mc_harness import DGP_KINDS, SVM, TABLE1, TABLE2, write_summaries

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_NONCONVERGENCE = 3

T = TypeVar("T")


def parse_list(text: str, convert: Callable[[str], T], flag: str) -> List[T]:
    """Parse a comma-separated flag value"""
    try:
        values = [convert(item.strip()) for item in text.split(",") if item.strip()]
    except ValueError:
        raise InvalidConfigError(f"{flag}: cannot parse {text!r}") from None
    if not values:
        raise InvalidConfigError(f"{flag}: no values given")
    return values


def parse_grid(text: str) -> List[float]:
    """
    Expand 'lo:hi:step' into round((hi - lo)/step) + 1 evenly spaced points.

    Args:
        text (str): Grid specification

    Returns:
        List[float]: Grid values, rounded to 12 decimals

    Raises:
        InvalidConfigError: If the grid is malformed
    """
    parts = text.split(":")
    if len(parts) != 3:
        raise InvalidConfigError(f"malformed grid {text!r}; expected lo:hi:step")
    try:
        lo, hi, step = (float(part) for part in parts)
    except ValueError:
        raise InvalidConfigError(f"malformed grid {text!r}; bounds and step must be numbers") from None
    if not all(math.isfinite(v) for v in (lo, hi, step)) or step <= 0 or hi < lo:
        raise InvalidConfigError(f"malformed grid {text!r}; need finite lo <= hi and step > 0")
    count = int(round((hi - lo) / step)) + 1
    return [round(lo + k * step, 12) for k in range(count)]


@contextmanager
def _output(path: Optional[str]) -> Iterator[TextIO]:
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            yield handle


class CommandLineUI:
    """Command-line front end: estimate, simulate, diagnose and history"""

    def __init__(self, workflow_factory: Callable[[Optional[str]], EstimationWorkflow] = EstimationWorkflow):
        self.workflow_factory = workflow_factory
        self.parser = self.build_parser()

    def build_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(
            prog="svm-bcm",
            description="SVM estimation of binary choice models, Monte Carlo studies and imbalance diagnostics",
        )
        commands = parser.add_subparsers(dest="command", required=True)

        estimate = commands.add_parser("estimate", help="fit one estimator to a CSV dataset")
        estimate.add_argument("--input", required=True, help="CSV with header; first column y")
        estimate.add_argument("--estimator", choices=FIT_ESTIMATORS, default=SVM)
        estimate.add_argument("--lambda", dest="lambda_", type=float, default=DEFAULT_LAMBDA)
        estimate.add_argument("--tol", type=float, default=None)
        estimate.add_argument("--max-iter", type=int, default=None)
        estimate.add_argument("--intercept-maxscore", action="store_true",
                              help="add the second-stage maximum score intercept")
        estimate.add_argument("--covariance", action="store_true",
                              help="add the sandwich covariance (svm only)")
        estimate.add_argument("--output", default=None, help="JSON destination (default: stdout)")
        estimate.set_defaults(handler=self.cmd_estimate)

        simulate = commands.add_parser("simulate", help="run a Monte Carlo study")
        simulate.add_argument("--dgp", choices=DGP_KINDS, required=True)
        simulate.add_argument("--alpha", default=None, help="table1 intercept(s), comma-separated")
        simulate.add_argument("--mu", default=None, help="table2 mixture parameter(s), comma-separated")
        simulate.add_argument("--n", default="1000", help="sample size(s), comma-separated")
        simulate.add_argument("--nsim", type=int, default=100)
        simulate.add_argument("--seed", type=int, default=0)
        simulate.add_argument("--estimators", default=SVM, help="comma list of svm,wsvm,logit,svm_ms")
        simulate.add_argument("--workers", type=int, default=None,
                              help="worker processes (default: BCM_WORKERS or 1)")
        simulate.add_argument("--record-db", default=None, help="SQLite file for run history")
        simulate.add_argument("--output", default=None, help="CSV destination (default: stdout)")
        simulate.set_defaults(handler=self.cmd_simulate)

        diagnose = commands.add_parser("diagnose", help="check the non-severe imbalance condition")
        target = diagnose.add_mutually_exclusive_group(required=True)
        target.add_argument("--mu", type=float, default=None)
        target.add_argument("--mu-grid", default=None, help="lo:hi:step")
        target.add_argument("--threshold", action="store_true", help="solve for the threshold mu")
        diagnose.add_argument("--index-model", choices=sorted(INDEX_MODELS), default="gaussian")
        diagnose.add_argument("--output", default=None)
        diagnose.set_defaults(handler=self.cmd_diagnose)

        history = commands.add_parser("history", help="list recorded simulation sessions")
        history.add_argument("--limit", type=int, default=10)
        history.add_argument("--record-db", default=None)
        view = history.add_mutually_exclusive_group()
        view.add_argument("--session", type=int, default=None, help="show the summary rows of one session")
        view.add_argument("--stats", action="store_true", help="session count and rows per estimator")
        history.set_defaults(handler=self.cmd_history)
        return parser

    def cmd_estimate(self, args: argparse.Namespace) -> int:
        data = load_csv(args.input)
        overrides = {}
        if args.tol is not None:
            overrides["tol"] = args.tol
        if args.max_iter is not None:
            overrides["max_iter"] = args.max_iter
        svm_config = SvmConfig(lambda_=args.lambda_, **overrides)
        logit_config = LogitConfig(**overrides)

        result = self.workflow_factory(None).run_estimate(
            data,
            estimator=args.estimator,
            svm_config=svm_config,
            logit_config=logit_config,
            intercept_maxscore=args.intercept_maxscore,
            covariance=args.covariance,
        )
        with _output(args.output) as sink:
            sink.write(json.dumps(result, indent=2) + "\n")

        if not result["converged"]:
            print(f"error: {args.estimator} did not converge", file=sys.stderr)
            return EXIT_NONCONVERGENCE
        return EXIT_OK

    def cmd_simulate(self, args: argparse.Namespace) -> int:
        if args.dgp == TABLE1 and args.mu is not None:
            raise InvalidConfigError("--mu applies to table2 only; use --alpha with table1")
        if args.dgp == TABLE2 and args.alpha is not None:
            raise InvalidConfigError("--alpha applies to table1 only; use --mu with table2")
        if args.seed < 0:
            raise InvalidConfigError("--seed must be nonnegative")

        raw_params = args.alpha if args.dgp == TABLE1 else args.mu
        params = parse_list(raw_params or "0", float, "--alpha" if args.dgp == TABLE1 else "--mu")
        sample_sizes = parse_list(args.n, int, "--n")
        estimators = parse_list(args.estimators, str, "--estimators")
        workers = args.workers if args.workers is not None else int(os.getenv("BCM_WORKERS", "1"))

        summaries = self.workflow_factory(args.record_db).run_simulation(
            args.dgp, params, sample_sizes, estimators, args.nsim,
            master_seed=args.seed, workers=workers,
        )
        with _output(args.output) as sink:
            write_summaries(summaries, sink)
        return EXIT_OK

    def cmd_diagnose(self, args: argparse.Namespace) -> int:
        workflow = self.workflow_factory(None)
        if args.threshold:
            root = workflow.run_threshold(args.index_model)
            with _output(args.output) as sink:
                sink.write(f"{root:.17g}\n")
            return EXIT_OK

        grid = [args.mu] if args.mu is not None else parse_grid(args.mu_grid)
        frame = workflow.run_diagnostics(grid, args.index_model)
        with _output(args.output) as sink:
            frame.to_csv(sink, index=False, float_format=FLOAT_FORMAT, na_rep="", lineterminator="\n")
        return EXIT_OK

    def cmd_history(self, args: argparse.Namespace) -> int:
        workflow = self.workflow_factory(args.record_db)
        if args.session is not None:
            payload = workflow.get_session(args.session)
        elif args.stats:
            payload = workflow.get_stats()
        else:
            payload = workflow.get_history(args.limit)
        print(json.dumps(payload, indent=2))
        return EXIT_OK

    def run(self, argv: Optional[Sequence[str]] = None) -> int:
        """
        Parse argv and dispatch to the command handler.

        Returns:
            int: 0 on success, 2 on input errors, 3 on non-convergence
        """
        try:
            args = self.parser.parse_args(argv)
        except SystemExit as e:
            return int(e.code or 0)

        try:
            return args.handler(args)
        except NonConvergenceError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_NONCONVERGENCE
        except (BinaryChoiceError, OSError, ValueError) as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_INPUT_ERROR
