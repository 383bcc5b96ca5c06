import argparse
from typing import Any, TypeVar

from pydantic import ValidationError

from ..config.model import Configuration
from ..util.constant import DataFormat
from ..util.error import ConfigurationError

ConfigurationT = TypeVar("ConfigurationT", bound=Configuration)


def add_data_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--data", required=True, help="Dataset file.")
    parser.add_argument("--format", choices=[f.value for f in DataFormat], default=DataFormat.CSV.value)
    parser.add_argument("--label-col", type=int, default=None, help="CSV label column (default: last).")
    parser.add_argument("--has-header", action="store_true", help="Skip the first CSV row.")
    parser.add_argument("--dim", type=int, default=None, help="libsvm feature count.")


def data_source_arguments(args: argparse.Namespace) -> dict[str, Any]:
    return without_none({
        "path": args.data,
        "format": args.format,
        "label_column": args.label_col,
        "has_header": args.has_header,
        "dim": args.dim,
        "features_only": getattr(args, "features_only", False),
    })


def without_none(values: dict[str, Any]) -> dict[str, Any]:
    return {key: value for key, value in values.items() if value is not None}


def build_configuration(model: type[ConfigurationT], **values) -> ConfigurationT:
    """
    Validates CLI values into a configuration model.

    Raises:
        ConfigurationError: If any value is invalid or flags conflict.
    """
    try:
        return model.model_validate(values)
    except ValidationError as e:
        details = "; ".join(f"{'.'.join(str(p) for p in error['loc'])}: {error['msg']}" for error in e.errors())
        raise ConfigurationError(f"Invalid settings: {details}") from e


def print_metric(value: float):
    print(f"metric={value}")
