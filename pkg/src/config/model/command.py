from pydantic import Field, field_validator, model_validator

from src.config.model import Configuration
from src.config.model.train import TrainConfiguration
from src.util.constant import DataFormat


# noinspection PyNestedDecorators
class DataSourceConfiguration(Configuration):
    """
    Where a dataset comes from and how to parse it.
    """
    path: str = Field(min_length=1)
    format: DataFormat = Field(default=DataFormat.CSV)
    label_column: int | None = Field(default=None, description="CSV label column, negative counts from the end.")
    has_header: bool = Field(default=False)
    dim: int | None = Field(default=None, gt=0, description="libsvm feature count; inferred when absent.")
    features_only: bool = Field(default=False, description="The file has no label column.")

    @field_validator("path", mode="after")
    @classmethod
    def validate_path(cls, path: str):
        if len(path.strip()) == 0:
            raise ValueError("Data path cannot be blank.")
        return path

    @model_validator(mode="after")
    def validate_format_flags(self):
        if self.format == DataFormat.LIBSVM:
            if self.label_column is not None:
                raise ValueError("--label-col applies to CSV data only.")
            if self.has_header:
                raise ValueError("--has-header applies to CSV data only.")
            if self.features_only:
                raise ValueError("libsvm rows always start with a label.")
        elif self.dim is not None:
            raise ValueError("--dim applies to libsvm data only.")
        if self.features_only and self.label_column is not None:
            raise ValueError("--features-only conflicts with --label-col.")
        return self

    @property
    def resolved_label_column(self) -> int | None:
        if self.features_only:
            return None
        return -1 if self.label_column is None else self.label_column


class TrainCommandConfiguration(Configuration):
    data: DataSourceConfiguration
    train: TrainConfiguration
    test_fraction: float = Field(default=0.1, gt=0.0, lt=1.0)
    checkpoint: str = Field(min_length=1)
    metrics_out: str | None = Field(default=None)

    @model_validator(mode="after")
    def validate_labels(self):
        if self.data.features_only:
            raise ValueError("Training data needs a label column.")
        return self


class PredictCommandConfiguration(Configuration):
    checkpoint: str = Field(min_length=1)
    data: DataSourceConfiguration
    output: str | None = Field(default=None, description="Predictions CSV; standard output when absent.")
    use_variance: bool = Field(default=False, description="Classify with softmax(m + s/2).")


class EvaluateCommandConfiguration(Configuration):
    checkpoint: str = Field(min_length=1)
    data: DataSourceConfiguration

    @model_validator(mode="after")
    def validate_labels(self):
        if self.data.features_only:
            raise ValueError("Evaluation data needs a label column.")
        return self


class DemoCommandConfiguration(Configuration):
    tensor_file: str | None = Field(default=None, description="Dense tensor with a shape header line.")
    shape: list[int] = Field(default_factory=lambda: [5, 5, 5, 5], min_length=1)
    r_max: int = Field(default=25, ge=1)
    seed: int = Field(default=0, ge=0)
    noise: float = Field(default=0.1, ge=0.0)
    output: str | None = Field(default=None, description="Demo CSV; standard output when absent.")

    @field_validator("shape", mode="after")
    @classmethod
    def validate_shape(cls, shape: list[int]):
        if any(n < 1 for n in shape):
            raise ValueError(f"Tensor mode sizes must be positive, got {shape}.")
        return shape
