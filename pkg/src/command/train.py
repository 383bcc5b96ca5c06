import argparse
import logging

from . import add_data_arguments, data_source_arguments, without_none, build_configuration, print_metric
from ..config.model.command import TrainCommandConfiguration
from ..data.function.checkpoint import save_checkpoint, write_manifest
from ..data.function.data_io import prepare_datasets
from ..data.function.training import train, evaluate_metric, write_history_csv
from ..data.function.variational_gp import clamped_fraction
from ..dependency import provide_dataset_loader
from ..util.constant import TaskKind, ExitCode

logger = logging.getLogger(__name__)


def add_parser(subparsers):
    parser = subparsers.add_parser("train", help="Train a TT-GP model and save a checkpoint.")
    add_data_arguments(parser)
    parser.add_argument("--task", required=True, choices=[t.value for t in TaskKind])
    parser.add_argument("--m0", type=int, help="Grid points per dimension.")
    parser.add_argument("--tt-rank", type=int)
    parser.add_argument("--embed-dim", type=int, help="Linear embedding dimension, 0 for none.")
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--batch-size", type=int)
    parser.add_argument("--lr", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--eval-every", type=int)
    parser.add_argument("--kernel-lr-decay-epoch", type=int)
    parser.add_argument("--lengthscale", type=float)
    parser.add_argument("--variance", type=float)
    parser.add_argument("--noise-variance", type=float)
    parser.add_argument("--tied-lengthscales", action="store_true", default=None)
    parser.add_argument("--per-class-kernels", action="store_true", default=None)
    parser.add_argument("--test-fraction", type=float)
    parser.add_argument("--checkpoint", required=True)
    parser.add_argument("--metrics-out")
    parser.set_defaults(handler=run_command)


def run_command(args: argparse.Namespace) -> int:
    kernel = without_none({
        "lengthscale": args.lengthscale,
        "variance": args.variance,
        "noise_variance": args.noise_variance,
        "tied_lengthscales": args.tied_lengthscales,
        "per_class": args.per_class_kernels,
    })
    settings = without_none({
        "task": args.task,
        "m0": args.m0,
        "tt_rank": args.tt_rank,
        "embedding_dim": args.embed_dim,
        "epochs": args.epochs,
        "batch_size": args.batch_size,
        "learning_rate": args.lr,
        "seed": args.seed,
        "workers": args.workers,
        "eval_every": args.eval_every,
        "kernel_lr_decay_epoch": args.kernel_lr_decay_epoch,
    })
    config = build_configuration(
        TrainCommandConfiguration,
        data=data_source_arguments(args),
        train={**settings, "kernel": kernel},
        checkpoint=args.checkpoint,
        **without_none({"test_fraction": args.test_fraction, "metrics_out": args.metrics_out}),
    )

    table = provide_dataset_loader(config.data).load(config.data.path)
    train_set, test_set = prepare_datasets(table, config.train.task, config.test_fraction, config.train.seed)
    result = train(train_set, config.train, validation=test_set)

    clamped = clamped_fraction(result.model, test_set.features)
    if clamped > 0.0:
        logger.warning("%.2f%% of held-out points lie outside the grid interior.", 100.0 * clamped)
    metric = evaluate_metric(result.model, test_set)

    save_checkpoint(result.model, result.state, config.checkpoint)
    write_manifest(config.checkpoint, {
        **config.model_dump(mode="json"),
        "train_rows": train_set.num_rows,
        "test_rows": test_set.num_rows,
        "clamped_test_fraction": clamped,
        "held_out_metric": metric,
    })
    if config.metrics_out is not None:
        write_history_csv(result.history, config.metrics_out)
    print_metric(metric)
    return ExitCode.SUCCESS
