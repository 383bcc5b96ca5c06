import argparse
import logging
import os
import sys
from collections.abc import Sequence

from dotenv import load_dotenv

from src.command import train, predict, evaluate, ttsvd_demo
from src.util.constant import EnvVar, ExitCode
from src.util.error import (
    TTGPError, ConfigurationError, ResourceLimitError, DataLoadError, CheckpointError, InvalidArgumentError,
    NumericError, DecompositionError,
)

logger = logging.getLogger(__name__)

EXIT_CODES: list[tuple[type[TTGPError], ExitCode]] = [
    (ConfigurationError, ExitCode.CONFIGURATION),
    (ResourceLimitError, ExitCode.CONFIGURATION),
    (DataLoadError, ExitCode.DATA),
    (CheckpointError, ExitCode.DATA),
    (InvalidArgumentError, ExitCode.DATA),
    (NumericError, ExitCode.NUMERIC),
    (DecompositionError, ExitCode.NUMERIC),
]


## Set up logging.
def setup_logging():
    level = os.getenv(EnvVar.LOG_LEVEL.value, "INFO")
    matches = {
        "INFO": logging.INFO,
        "DEBUG": logging.DEBUG,
        "WARNING": logging.WARNING,
    }

    pattern = (
        "%(asctime)s - %(levelname)s - %(name)s - "
        "%(filename)s:%(lineno)d - %(message)s"
    )
    logging.basicConfig(level=matches.get(level, logging.INFO), format=pattern, stream=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ttgp", description="Gaussian processes with Tensor Train inducing grids.")
    subparsers = parser.add_subparsers(dest="command", required=True)
    train.add_parser(subparsers)
    predict.add_parser(subparsers)
    evaluate.add_parser(subparsers)
    ttsvd_demo.add_parser(subparsers)
    return parser


def exit_code_for(error: TTGPError) -> ExitCode:
    for kind, code in EXIT_CODES:
        if isinstance(error, kind):
            return code
    return ExitCode.DATA


def run(argv: Sequence[str] | None = None) -> int:
    load_dotenv()
    setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits with 2 on usage errors, which is also the configuration code
        return int(e.code or 0)

    try:
        return int(args.handler(args))
    except TTGPError as e:
        logger.debug("Command %s failed.", args.command, exc_info=e)
        print(f"error: {e.reason}", file=sys.stderr)
        return exit_code_for(e)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return ExitCode.DATA


if __name__ == "__main__":
    sys.exit(run())
