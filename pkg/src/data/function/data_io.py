import logging
import re
from abc import ABC, abstractmethod
from collections import Counter
from pathlib import Path

import numpy as np
import pandas as pd
from sklearn.datasets import load_svmlight_file
from sklearn.model_selection import train_test_split
from sklearn.preprocessing import StandardScaler

from ..model.dataset import RawTable, Dataset, DatasetStatistics
from ...util.constant import TaskKind, DEFAULT_CHARSET
from ...util.error import DataLoadError, InvalidArgumentError

logger = logging.getLogger(__name__)

_PARSER_LINE = re.compile(r"line (\d+)")


# noinspection PyTypeHints
class IDatasetLoader(ABC):

    @abstractmethod
    def load(self, path: str | Path) -> RawTable:
        """
        Reads a dataset file into a raw table.

        Args:
            path: Dataset file.

        Returns:
            Features, raw target strings and the source line of every row.

        Raises:
            DataLoadError: If the file is missing or malformed.
        """
        pass


class CsvDatasetLoader(IDatasetLoader):

    def __init__(self, label_column: int | None = -1, has_header: bool = False):
        self._label_column = label_column
        self._has_header = has_header

    def load(self, path: str | Path) -> RawTable:
        return load_csv(path, self._label_column, self._has_header)


class LibsvmDatasetLoader(IDatasetLoader):

    def __init__(self, dim: int | None = None):
        self._dim = dim

    def load(self, path: str | Path) -> RawTable:
        return load_libsvm(path, self._dim)


def _empty_table(path: str, num_features: int = 0) -> RawTable:
    return RawTable(features=np.zeros((0, num_features)), targets=[], line_numbers=[], path=path)


def _check_file(path: str | Path) -> str:
    if not Path(path).is_file():
        raise DataLoadError(f"Data file not found: {path}", path=str(path))
    return str(path)


def load_csv(path: str | Path, label_column: int | None = -1, has_header: bool = False) -> RawTable:
    """
    Comma-separated numeric table; `label_column` None means the file holds features only.
    """
    source = _check_file(path)
    try:
        frame = pd.read_csv(source, header=0 if has_header else None, dtype=str, keep_default_na=False,
                            skip_blank_lines=False, encoding=DEFAULT_CHARSET)
    except pd.errors.EmptyDataError:
        logger.warning("Data file %s is empty.", source)
        return _empty_table(source)
    except pd.errors.ParserError as e:
        match = _PARSER_LINE.search(str(e))
        line = int(match.group(1)) if match else None
        raise DataLoadError(f"Ragged row in {source} line {line}: {e}", path=source, line=line) from e
    except (OSError, UnicodeDecodeError) as e:
        raise DataLoadError(f"Cannot read {source}: {e}", path=source) from e

    frame = frame.fillna("").apply(lambda column: column.str.strip())
    values = frame.to_numpy(dtype=object)
    lines = np.arange(values.shape[0]) + (2 if has_header else 1)
    keep = ~np.all(values == "", axis=1)
    values, lines = values[keep], lines[keep]
    if values.shape[0] == 0:
        return _empty_table(source)

    missing = np.nonzero(np.any(values == "", axis=1))[0]
    if missing.size > 0:
        line = int(lines[missing[0]])
        raise DataLoadError(f"Missing field in {source} line {line}.", path=source, line=line)

    num_columns = values.shape[1]
    if label_column is None:
        feature_text, targets = values, [""] * values.shape[0]
    else:
        if not -num_columns <= label_column < num_columns:
            raise DataLoadError(f"Label column {label_column} out of range for {num_columns} columns in {source}.",
                                path=source)
        column = label_column % num_columns
        feature_text = np.delete(values, column, axis=1)
        targets = [str(t) for t in values[:, column]]

    features = pd.DataFrame(feature_text).apply(pd.to_numeric, errors="coerce").to_numpy(dtype=np.float64)
    bad = ~np.isfinite(features)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        line = int(lines[row])
        raise DataLoadError(f"Unparseable or non-finite value {feature_text[row, col]!r} in {source} line {line}.",
                            path=source, line=line)
    logger.info("Loaded %d rows with %d features from %s.", features.shape[0], features.shape[1], source)
    return RawTable(features=features, targets=targets, line_numbers=lines.tolist(), path=source)


def _content_lines(path: str) -> list[tuple[int, str]]:
    with open(path, encoding=DEFAULT_CHARSET) as f:
        rows = [(number, line.split("#", 1)[0].strip()) for number, line in enumerate(f, start=1)]
    return [(number, content) for number, content in rows if content]


def _malformed_libsvm_line(rows: list[tuple[int, str]], dim: int | None) -> int | None:
    for number, content in rows:
        tokens = content.split()
        try:
            float(tokens[0])
            for token in tokens[1:]:
                index, value = token.split(":")
                if index == "qid":
                    continue
                if int(index) < 1 or (dim is not None and int(index) > dim) or not np.isfinite(float(value)):
                    return number
        except ValueError:
            return number
    return None


def load_libsvm(path: str | Path, dim: int | None = None) -> RawTable:
    """
    "label idx:val …" rows with 1-based indices; absent indices are 0.
    """
    source = _check_file(path)
    try:
        rows = _content_lines(source)
    except (OSError, UnicodeDecodeError) as e:
        raise DataLoadError(f"Cannot read {source}: {e}", path=source) from e
    if not rows:
        logger.warning("Data file %s is empty.", source)
        return _empty_table(source, dim or 0)
    try:
        x, y = load_svmlight_file(source, n_features=dim, dtype=np.float64, zero_based=False)
    except ValueError as e:
        line = _malformed_libsvm_line(rows, dim)
        raise DataLoadError(f"Malformed libsvm data in {source} line {line}: {e}", path=source, line=line) from e

    features = x.toarray()
    if len(rows) != features.shape[0]:
        raise DataLoadError(f"Could not align rows of {source} with source lines.", path=source)
    bad = np.nonzero(~np.all(np.isfinite(features), axis=1) | ~np.isfinite(y))[0]
    if bad.size > 0:
        line = rows[bad[0]][0]
        raise DataLoadError(f"Non-finite value in {source} line {line}.", path=source, line=line)
    targets = [np.format_float_positional(value, trim="-") for value in y]
    logger.info("Loaded %d rows with %d features from %s.", features.shape[0], features.shape[1], source)
    return RawTable(features=features, targets=targets, line_numbers=[number for number, _ in rows], path=source)


def table_from_arrays(features: np.ndarray, targets: np.ndarray, path: str = "<memory>") -> RawTable:
    features = np.asarray(features, dtype=np.float64)
    return RawTable(
        features=features,
        targets=[repr(float(t)) if isinstance(t, (float, np.floating)) else str(t) for t in targets],
        line_numbers=list(range(1, features.shape[0] + 1)),
        path=path,
    )


def _parse_targets(table: RawTable) -> np.ndarray:
    targets = pd.to_numeric(pd.Series(table.targets, dtype=object), errors="coerce").to_numpy(dtype=np.float64)
    bad = np.nonzero(~np.isfinite(targets))[0]
    if bad.size > 0:
        line = table.line_numbers[bad[0]]
        raise DataLoadError(f"Unparseable target {table.targets[bad[0]]!r} in {table.path} line {line}.",
                            path=table.path, line=line)
    return targets


def standardize(table: RawTable, task: TaskKind, label_values: list[str] | None = None) -> DatasetStatistics:
    """
    Fits z-score statistics on a training split. Constant columns keep std 1.
    """
    if table.num_rows == 0:
        raise InvalidArgumentError(f"Cannot standardize an empty split of {table.path}.")
    scaler = StandardScaler().fit(table.features)
    constant = np.nonzero(scaler.var_ == 0.0)[0]
    if constant.size > 0:
        logger.warning("Constant feature column(s) %s in %s; recording std 1.", constant.tolist(), table.path)
    stds = np.where(scaler.var_ > 0.0, scaler.scale_, 1.0)

    if task == TaskKind.REGRESSION:
        targets = _parse_targets(table)
        target_std = float(targets.std())
        return DatasetStatistics(task=task, feature_means=scaler.mean_, feature_stds=stds,
                                 target_mean=float(targets.mean()),
                                 target_std=target_std if target_std > 0.0 else 1.0)

    labels = list(label_values) if label_values is not None else table.label_values
    if len(labels) < 2:
        raise InvalidArgumentError(f"Classification needs at least two classes, found {labels}.")
    absent = [label for label in labels if label not in set(table.targets)]
    if absent:
        raise InvalidArgumentError(f"Classes {absent} have no training instances.")
    return DatasetStatistics(task=task, feature_means=scaler.mean_, feature_stds=stds, label_values=labels)


def encode_labels(table: RawTable, label_values: list[str]) -> np.ndarray:
    """Class index of every row under a recorded label mapping."""
    mapping = {label: index for index, label in enumerate(label_values)}
    encoded = np.empty(table.num_rows)
    for row, target in enumerate(table.targets):
        if target not in mapping:
            line = table.line_numbers[row]
            raise DataLoadError(f"Unknown label {target!r} in {table.path} line {line}.", path=table.path, line=line)
        encoded[row] = mapping[target]
    return encoded


def apply_features(statistics: DatasetStatistics, features: np.ndarray, path: str = "<memory>") -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.shape[0] == 0:
        return np.zeros((0, statistics.num_features))
    if features.ndim != 2 or features.shape[1] != statistics.num_features:
        raise DataLoadError(f"Expected {statistics.num_features} features, got {features.shape[-1]} in {path}.",
                            path=path)
    return (features - statistics.feature_means) / statistics.feature_stds


def apply(statistics: DatasetStatistics, table: RawTable) -> Dataset:
    features = apply_features(statistics, table.features, table.path)
    if statistics.task == TaskKind.REGRESSION:
        targets = (_parse_targets(table) - statistics.target_mean) / statistics.target_std
    else:
        targets = encode_labels(table, statistics.label_values)
    return Dataset(features=features, targets=targets, statistics=statistics)


def inverse_targets(statistics: DatasetStatistics, targets: np.ndarray) -> np.ndarray:
    return np.asarray(targets, dtype=np.float64) * statistics.target_std + statistics.target_mean


def split(table: RawTable, task: TaskKind, test_fraction: float, seed: int) -> tuple[RawTable, RawTable]:
    """
    Seeded shuffle and partition; stratified by label for classification.

    Raises:
        InvalidArgumentError: If the fraction is outside (0, 1) or a class is too small to stratify.
    """
    if not 0.0 < test_fraction < 1.0:
        raise InvalidArgumentError(f"Test fraction must lie in (0, 1), got {test_fraction}.")
    stratify = np.asarray(table.targets, dtype=object) if task == TaskKind.CLASSIFICATION else None
    if stratify is not None:
        smallest = min(Counter(table.targets).values(), default=0)
        if smallest < 2:
            raise InvalidArgumentError("Every class needs at least 2 instances for a stratified split.")
    try:
        train_index, test_index = train_test_split(np.arange(table.num_rows), test_size=test_fraction,
                                                   random_state=seed, shuffle=True, stratify=stratify)
    except ValueError as e:
        raise InvalidArgumentError(f"Cannot split {table.path}: {e}") from e
    return table.subset(train_index), table.subset(test_index)


def prepare_datasets(table: RawTable, task: TaskKind, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Split, fit statistics on the training part only, and standardize both parts."""
    label_values = table.label_values if task == TaskKind.CLASSIFICATION else None
    train_table, test_table = split(table, task, test_fraction, seed)
    statistics = standardize(train_table, task, label_values)
    train, test = apply(statistics, train_table), apply(statistics, test_table)
    if task == TaskKind.CLASSIFICATION:
        counts = np.bincount(train.labels, minlength=train.num_classes)
        logger.info("Training split: %d rows, class counts %s.", train.num_rows, counts.tolist())
    else:
        logger.info("Training split: %d rows; held-out split: %d rows.", train.num_rows, test.num_rows)
    return train, test
