import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .. import FloatArray
from ...util.constant import TaskKind
from ...util.error import InvalidArgumentError, ShapeMismatchError


class RawTable(BaseModel):
    """
    A loaded but not yet standardized table: features plus the raw target column.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    features: FloatArray
    targets: list[str] = Field(description="Target column as read, one entry per row.")
    line_numbers: list[int] = Field(description="1-based source line of every row.")
    path: str

    @model_validator(mode="after")
    def validate_shapes(self):
        if self.features.ndim != 2:
            raise ShapeMismatchError(f"Feature matrix must be 2-D, got shape {self.features.shape}.")
        if len(self.targets) != self.features.shape[0] or len(self.line_numbers) != self.features.shape[0]:
            raise ShapeMismatchError("Feature rows, targets and line numbers disagree in length.")
        return self

    @property
    def num_rows(self) -> int:
        return self.features.shape[0]

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    @property
    def label_values(self) -> list[str]:
        """Distinct targets in order of first appearance."""
        return list(dict.fromkeys(self.targets))

    def subset(self, index: np.ndarray) -> "RawTable":
        index = np.asarray(index, dtype=np.int64)
        return RawTable(
            features=self.features[index],
            targets=[self.targets[i] for i in index],
            line_numbers=[self.line_numbers[i] for i in index],
            path=self.path,
        )


class DatasetStatistics(BaseModel):
    """
    Standardization statistics fitted on a training split, plus the label mapping.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    task: TaskKind
    feature_means: FloatArray
    feature_stds: FloatArray
    target_mean: float = 0.0
    target_std: float = 1.0
    label_values: list[str] = Field(default_factory=list, description="Original label of class index c.")

    @property
    def num_features(self) -> int:
        return self.feature_means.size

    @property
    def num_classes(self) -> int:
        return len(self.label_values) if self.task == TaskKind.CLASSIFICATION else 1


class Dataset(BaseModel):
    """
    Standardized features and encoded targets of one split.

    Regression targets are z-scored; classification targets are class indices
    stored as floats in 0..C-1.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    features: FloatArray
    targets: FloatArray
    statistics: DatasetStatistics

    @model_validator(mode="after")
    def validate_content(self):
        if self.features.ndim != 2 or self.targets.ndim != 1:
            raise ShapeMismatchError("Features must be a matrix and targets a vector.")
        if self.features.shape[0] != self.targets.shape[0]:
            raise ShapeMismatchError("Features and targets disagree in length.")
        if self.features.shape[1] != self.statistics.num_features:
            raise ShapeMismatchError("Features and statistics disagree in dimensionality.")
        if not (np.all(np.isfinite(self.features)) and np.all(np.isfinite(self.targets))):
            raise InvalidArgumentError("Dataset contains non-finite values.")
        if self.task == TaskKind.CLASSIFICATION and self.targets.size > 0:
            labels = self.targets
            if np.any(labels != np.round(labels)) or labels.min() < 0 or labels.max() >= self.num_classes:
                raise InvalidArgumentError(f"Labels must be integers in [0, {self.num_classes}).")
        return self

    @property
    def task(self) -> TaskKind:
        return self.statistics.task

    @property
    def num_rows(self) -> int:
        return self.features.shape[0]

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    @property
    def num_classes(self) -> int:
        return self.statistics.num_classes

    @property
    def labels(self) -> np.ndarray:
        return self.targets.astype(np.int64)

    def subset(self, index: np.ndarray) -> "Dataset":
        return Dataset(features=self.features[index], targets=self.targets[index], statistics=self.statistics)
