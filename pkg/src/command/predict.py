import argparse
import logging
import sys

import pandas as pd

from . import add_data_arguments, data_source_arguments, without_none, build_configuration
from ..config.model.command import PredictCommandConfiguration
from ..data.function.checkpoint import load_checkpoint
from ..data.function.data_io import apply_features
from ..data.function.variational_gp import predict_regression, predict_classification
from ..dependency import provide_dataset_loader
from ..util.constant import ExitCode
from ..util.error import CheckpointError

logger = logging.getLogger(__name__)


def add_parser(subparsers):
    parser = subparsers.add_parser("predict", help="Predict with a saved checkpoint.")
    parser.add_argument("--checkpoint", required=True)
    add_data_arguments(parser)
    parser.add_argument("--features-only", action="store_true", help="The file has no label column.")
    parser.add_argument("--output", help="Predictions CSV (default: standard output).")
    parser.add_argument("--use-variance", action="store_true", help="Classify with softmax(m + s/2).")
    parser.set_defaults(handler=run_command)


def run_command(args: argparse.Namespace) -> int:
    config = build_configuration(
        PredictCommandConfiguration,
        checkpoint=args.checkpoint,
        data=data_source_arguments(args),
        use_variance=args.use_variance,
        **without_none({"output": args.output}),
    )
    model, _ = load_checkpoint(config.checkpoint)
    if model.statistics is None:
        raise CheckpointError(f"Checkpoint {config.checkpoint} carries no dataset statistics.")

    table = provide_dataset_loader(config.data).load(config.data.path)
    features = apply_features(model.statistics, table.features, table.path)
    if model.is_regression:
        means, variances = predict_regression(model, features)
        frame = pd.DataFrame({"mean": means, "variance": variances})
    else:
        labels, scores = predict_classification(model, features, config.use_variance)
        label_values = model.statistics.label_values
        frame = pd.DataFrame({"label": [label_values[i] for i in labels]})
        for c, label in enumerate(label_values):
            frame[f"score_{label}"] = scores[:, c]
    frame.to_csv(config.output if config.output is not None else sys.stdout, index=False)
    logger.info("Wrote %d predictions.", len(frame))
    return ExitCode.SUCCESS
