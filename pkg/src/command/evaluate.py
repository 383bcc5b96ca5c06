import argparse

from . import add_data_arguments, data_source_arguments, build_configuration, print_metric
from ..config.model.command import EvaluateCommandConfiguration
from ..data.function.checkpoint import load_checkpoint
from ..data.function.data_io import apply
from ..data.function.training import evaluate_metric
from ..dependency import provide_dataset_loader
from ..util.constant import ExitCode
from ..util.error import CheckpointError


def add_parser(subparsers):
    parser = subparsers.add_parser("evaluate", help="Score a saved checkpoint on a labeled file.")
    parser.add_argument("--checkpoint", required=True)
    add_data_arguments(parser)
    parser.set_defaults(handler=run_command)


def run_command(args: argparse.Namespace) -> int:
    config = build_configuration(EvaluateCommandConfiguration, checkpoint=args.checkpoint,
                                 data=data_source_arguments(args))
    model, _ = load_checkpoint(config.checkpoint)
    if model.statistics is None:
        raise CheckpointError(f"Checkpoint {config.checkpoint} carries no dataset statistics.")
    table = provide_dataset_loader(config.data).load(config.data.path)
    print_metric(evaluate_metric(model, apply(model.statistics, table)))
    return ExitCode.SUCCESS
