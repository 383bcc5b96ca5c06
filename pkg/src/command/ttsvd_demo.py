import argparse
import sys

import numpy as np
import pandas as pd

from . import without_none, build_configuration
from ..config.model.command import DemoCommandConfiguration
from ..data.function.rank_study import synthetic_smooth_tensor, load_dense_tensor, truncation_sweep
from ..util.constant import DEMO_COLUMNS, ExitCode


def add_parser(subparsers):
    parser = subparsers.add_parser("ttsvd-demo", help="TT-SVD approximation error as a function of TT-rank.")
    parser.add_argument("--tensor-file", help="Dense tensor with a 'shape:' header line.")
    parser.add_argument("--shape", type=int, nargs="+", help="Synthetic tensor mode sizes (default 5 5 5 5).")
    parser.add_argument("--r-max", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--noise", type=float)
    parser.add_argument("--output", help="Demo CSV (default: standard output).")
    parser.set_defaults(handler=run_command)


def run_command(args: argparse.Namespace) -> int:
    config = build_configuration(DemoCommandConfiguration, **without_none({
        "tensor_file": args.tensor_file,
        "shape": args.shape,
        "r_max": args.r_max,
        "seed": args.seed,
        "noise": args.noise,
        "output": args.output,
    }))
    if config.tensor_file is not None:
        tensor = load_dense_tensor(config.tensor_file)
    else:
        tensor = synthetic_smooth_tensor(config.shape, np.random.default_rng(config.seed), config.noise)
    rows = truncation_sweep(tensor, config.r_max)
    pd.DataFrame(rows, columns=DEMO_COLUMNS).to_csv(
        config.output if config.output is not None else sys.stdout, index=False, float_format="%.17g")
    return ExitCode.SUCCESS
