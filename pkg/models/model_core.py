"""
Core data model for binary choice estimation.

Holds the sample (Y_i, X_i) with labels in {-1, +1}, the parameter
theta = (alpha, beta')', the counter-based random stream identifier, and the
elementary classifier operations every estimator shares.
"""

import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterable, Optional, TextIO, Tuple, Union

import numpy as np
import pandas as pd

from .errors import DataParseError, DegenerateEstimateError, DimensionMismatchError

logger = logging.getLogger(__name__)

LABEL_COLUMN = "y"
FLOAT_FORMAT = "%.17g"
_UINT64_LIMIT = 2 ** 64


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Dataset:
    """An i.i.d. sample of labels in {-1, +1} and an n x m covariate matrix"""

    labels: np.ndarray
    covariates: np.ndarray
    names: Tuple[str, ...] = field(default=())

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.float64).reshape(-1)
        covariates = np.array(self.covariates, dtype=np.float64)
        if covariates.ndim == 1:
            covariates = covariates.reshape(-1, 1)
        if covariates.ndim != 2:
            raise DimensionMismatchError("covariates must be a 2-D matrix")
        if covariates.shape[0] != labels.shape[0]:
            raise DimensionMismatchError(
                f"{labels.shape[0]} labels but {covariates.shape[0]} covariate rows"
            )
        if labels.shape[0] < 2:
            raise DataParseError("a dataset needs at least 2 observations")
        if covariates.shape[1] < 1:
            raise DataParseError("a dataset needs at least one covariate")
        if not np.all((labels == 1.0) | (labels == -1.0)):
            raise DataParseError("labels must be exactly -1 or +1")
        if not np.all(np.isfinite(covariates)):
            raise DataParseError("covariates contain non-finite entries")

        names = tuple(self.names) or tuple(f"x{j + 1}" for j in range(covariates.shape[1]))
        if len(names) != covariates.shape[1]:
            raise DimensionMismatchError("one name per covariate column is required")

        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "covariates", _frozen(covariates))
        object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return int(self.labels.shape[0])

    @property
    def m(self) -> int:
        return int(self.covariates.shape[1])

    @property
    def n_positive(self) -> int:
        return int(np.count_nonzero(self.labels > 0))

    @property
    def n_negative(self) -> int:
        return self.n - self.n_positive

    def has_both_classes(self) -> bool:
        return 0 < self.n_positive < self.n

    def design_matrix(self) -> np.ndarray:
        """Rows z_i = (1, x_i')'"""
        return np.column_stack([np.ones(self.n), self.covariates])

    def with_labels(self, labels: np.ndarray) -> "Dataset":
        return Dataset(labels=labels, covariates=self.covariates, names=self.names)

    def with_covariates(self, covariates: np.ndarray) -> "Dataset":
        return Dataset(labels=self.labels, covariates=covariates, names=self.names)


@dataclass(frozen=True)
class Theta:
    """The parameter theta = (alpha, beta')'"""

    alpha: float
    beta: np.ndarray

    def __post_init__(self):
        beta = np.array(self.beta, dtype=np.float64).reshape(-1)
        alpha = float(self.alpha)
        if not (math.isfinite(alpha) and np.all(np.isfinite(beta))):
            raise DegenerateEstimateError("theta must have finite entries")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", _frozen(beta))

    @property
    def m(self) -> int:
        return int(self.beta.shape[0])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([[self.alpha], self.beta])

    @classmethod
    def from_vector(cls, vector: Iterable[float]) -> "Theta":
        vector = np.asarray(vector, dtype=np.float64)
        return cls(alpha=vector[0], beta=vector[1:])

    @classmethod
    def zeros(cls, m: int) -> "Theta":
        return cls(alpha=0.0, beta=np.zeros(m))

    def scaled(self, factor: float) -> "Theta":
        return Theta(alpha=self.alpha * factor, beta=self.beta * factor)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": [float(b) for b in self.beta]}


@dataclass(frozen=True)
class RngSeed:
    """Identifies one counter-based random stream: (master_seed, stream_index)"""

    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_index"):
            value = getattr(self, name)
            if not 0 <= int(value) < _UINT64_LIMIT:
                raise ValueError(f"{name} must be a 64-bit unsigned integer, got {value}")
            object.__setattr__(self, name, int(value))

    def generator(self) -> np.random.Generator:
        """
        Build the stream's generator.

        The Philox key is derived from both integers through a SeedSequence
        spawn key, so the stream depends on nothing else (in particular not on
        the order in which replications are executed).
        """
        sequence = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.Philox(sequence))


def _check_dimension(theta: Theta, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != theta.m:
        raise DimensionMismatchError(f"theta has {theta.m} slopes but x has {x.shape[-1]} entries")
    return x


def linear_index(theta: Theta, x: np.ndarray) -> Union[float, np.ndarray]:
    """
    Evaluate alpha + x'beta.

    Args:
        theta (Theta): Parameter
        x (np.ndarray): A covariate vector of length m, or an n x m matrix

    Returns:
        float or np.ndarray: The index, one value per row when x is a matrix
    """
    x = _check_dimension(theta, x)
    value = theta.alpha + x @ theta.beta
    return float(value) if np.ndim(value) == 0 else value


def classify(theta: Theta, x: np.ndarray) -> Union[int, np.ndarray]:
    """Return sgn(alpha + x'beta) with sgn(0) = +1."""
    index = linear_index(theta, x)
    if np.ndim(index) == 0:
        return 1 if index >= 0 else -1
    return np.where(index >= 0, 1, -1)


def rescaled_slope(theta: Theta, numerator: int = 0, denominator: int = 1) -> float:
    """
    Ratio of two slope components, beta[numerator] / beta[denominator].

    Raises:
        DegenerateEstimateError: If beta[denominator] is zero
    """
    if not (0 <= numerator < theta.m and 0 <= denominator < theta.m):
        raise DimensionMismatchError(f"slope indices out of range for m = {theta.m}")
    denom = theta.beta[denominator]
    if denom == 0.0:
        raise DegenerateEstimateError(
            f"slope component {denominator} is zero; the rescaled slope is undefined"
        )
    return float(theta.beta[numerator] / denom)


def _parse_float(cell: Optional[str], row: int, column: str) -> float:
    if cell is None or (isinstance(cell, float) and math.isnan(cell)):
        raise DataParseError("missing value", row=row, column=column)
    text = str(cell).strip()
    if text == "":
        raise DataParseError("missing value", row=row, column=column)
    try:
        return float(text)
    except ValueError:
        raise DataParseError(f"non-numeric cell {text!r}", row=row, column=column) from None


def load_csv(source: Union[BinaryIO, TextIO, str, Path]) -> Dataset:
    """
    Read a dataset from a UTF-8 CSV with header row.

    The first column must be named ``y`` and hold labels in {-1, 1} or {0, 1};
    every remaining column is a covariate, kept in file order.

    Args:
        source: A binary or text stream, or a filesystem path

    Returns:
        Dataset: Labels mapped to {-1, +1}

    Raises:
        DataParseError: Naming the offending row (1-based, header excluded)
            and column
    """
    if isinstance(source, (str, Path)):
        with open(source, "rb") as handle:
            return load_csv(handle)
    if isinstance(source, io.TextIOBase):
        stream = source
    else:
        stream = io.TextIOWrapper(source, encoding="utf-8", newline="")

    try:
        frame = pd.read_csv(stream, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise DataParseError("empty input") from None
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise DataParseError(f"malformed CSV: {e}") from None

    columns = [str(c).strip() for c in frame.columns]
    if not columns or columns[0] != LABEL_COLUMN:
        raise DataParseError(f"first column must be named '{LABEL_COLUMN}'", row=0)
    if len(columns) < 2:
        raise DataParseError("no covariate columns", row=0)
    raw_labels = []
    covariates = np.empty((len(frame), len(columns) - 1), dtype=np.float64)
    for i, record in enumerate(frame.itertuples(index=False, name=None)):
        row = i + 1
        raw_labels.append(_parse_float(record[0], row, columns[0]))
        for j, cell in enumerate(record[1:]):
            covariates[i, j] = _parse_float(cell, row, columns[j + 1])
        if not np.all(np.isfinite(covariates[i])):
            bad = int(np.flatnonzero(~np.isfinite(covariates[i]))[0])
            raise DataParseError("non-finite value", row=row, column=columns[bad + 1])

    if len(frame) < 2:
        raise DataParseError(f"at least 2 rows are required, found {len(frame)}")

    labels = np.asarray(raw_labels)
    for i, value in enumerate(labels):
        if value not in (-1.0, 0.0, 1.0):
            raise DataParseError(f"label {value:g} not in {{-1, 0, 1}}", row=i + 1, column=LABEL_COLUMN)
    has_zero = np.any(labels == 0.0)
    has_minus = np.any(labels == -1.0)
    if has_zero and has_minus:
        first_minority = int(np.flatnonzero(labels == (0.0 if labels[0] == -1.0 else -1.0))[0])
        raise DataParseError(
            "mixed label alphabets {0,1} and {-1,1}", row=first_minority + 1, column=LABEL_COLUMN
        )
    if has_zero:
        labels = np.where(labels == 0.0, -1.0, 1.0)

    logger.debug("Loaded %d rows with %d covariates", len(labels), covariates.shape[1])
    return Dataset(labels=labels, covariates=covariates, names=tuple(columns[1:]))


def write_csv(data: Dataset, sink: Union[TextIO, str, Path]) -> None:
    """Write a dataset in the format load_csv reads, with round-trip float precision."""
    frame = pd.DataFrame(data.covariates, columns=list(data.names))
    frame.insert(0, LABEL_COLUMN, data.labels.astype(np.int64))
    frame.to_csv(sink, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
