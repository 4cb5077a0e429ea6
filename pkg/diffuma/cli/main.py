"""`diffuma` command line.

Exit codes: 0 success, 2 usage or validation error, 3 file or checkpoint
problem, 4 non-finite numbers during training.
"""

from __future__ import annotations

import argparse
import enum
import logging
import sys
from collections.abc import Callable, Sequence
from pathlib import Path

from diffuma.cli import commands
from diffuma.data.synthetic import Motif
from diffuma.errors import (
    ArchiveError,
    CheckpointError,
    ConfigError,
    DiffumaError,
    DimensionError,
    NumericalError,
)
from diffuma.settings import get_settings


logger = logging.getLogger("diffuma")


class ExitCode(enum.IntEnum):
    ok = 0
    usage = 2
    io = 3
    numerical = 4


_EXIT_CODES: tuple[tuple[type[BaseException], ExitCode], ...] = (
    (NumericalError, ExitCode.numerical),
    (ConfigError, ExitCode.usage),
    (DimensionError, ExitCode.usage),
    (ArchiveError, ExitCode.io),
    (CheckpointError, ExitCode.io),
    (OSError, ExitCode.io),
    (DiffumaError, ExitCode.usage),
)


def exit_code_for(error: BaseException) -> ExitCode:
    for error_type, code in _EXIT_CODES:
        if isinstance(error, error_type):
            return code
    raise error


def _ablation_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--disable-diffusion",
        action="store_true",
        help="run the Mamba path alone",
    )
    parser.add_argument(
        "--zero-context",
        action="store_true",
        help="replace the Mamba context condition by zeros",
    )


def build_parser() -> argparse.ArgumentParser:
    formatter = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(
        prog="diffuma",
        description="Dual-path video frame prediction",
        formatter_class=formatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser(
        "gen-data",
        help="write a synthetic BTCW archive",
        formatter_class=formatter,
    )
    gen.add_argument("--out", type=Path, required=True, help="archive path")
    gen.add_argument(
        "--motif",
        choices=[motif.value for motif in Motif],
        default=Motif.bouncing_blob.value,
        help="kind of motion",
    )
    gen.add_argument("--samples", type=int, default=8, help="sequences")
    gen.add_argument("--frames", type=int, default=10, help="frames each")
    gen.add_argument("--height", type=int, default=32, help="frame height")
    gen.add_argument("--width", type=int, default=32, help="frame width")
    gen.add_argument("--t-in", type=int, default=5, help="history frames")
    gen.add_argument("--seed", type=int, default=0, help="generator seed")
    gen.set_defaults(handler=commands.gen_data)

    train = sub.add_parser(
        "train",
        help="train a model from a config file",
        formatter_class=formatter,
    )
    train.add_argument("--config", type=Path, required=True)
    train.add_argument(
        "--resume",
        action="store_true",
        help="continue from the latest checkpoint in checkpoint_dir",
    )
    _ablation_flags(train)
    train.set_defaults(handler=commands.train)

    evaluate = sub.add_parser(
        "eval",
        help="write per-horizon MSE/MAE/SSIM reports",
        formatter_class=formatter,
    )
    evaluate.add_argument(
        "--config",
        type=Path,
        default=None,
        help="defaults to the config stored in the checkpoint",
    )
    evaluate.add_argument("--checkpoint", type=Path, required=True)
    evaluate.add_argument("--data", type=Path, required=True)
    evaluate.add_argument(
        "--horizon",
        default=None,
        help="comma-separated horizons; defaults to t_out",
    )
    evaluate.add_argument("--report", type=Path, required=True)
    evaluate.add_argument(
        "--steps-per-epoch",
        type=int,
        default=None,
        help="report the checkpoint step as an epoch count",
    )
    _ablation_flags(evaluate)
    evaluate.set_defaults(handler=commands.evaluate)

    predict = sub.add_parser(
        "predict",
        help="export predicted frames",
        formatter_class=formatter,
    )
    predict.add_argument("--checkpoint", type=Path, required=True)
    predict.add_argument("--data", type=Path, required=True)
    predict.add_argument("--out-dir", type=Path, required=True)
    predict.add_argument(
        "--format",
        choices=["pgm", "btchw"],
        default="pgm",
        help="one PGM per frame, or one archive of history plus forecast",
    )
    _ablation_flags(predict)
    predict.set_defaults(handler=commands.predict)

    sweep = sub.add_parser(
        "sweep-lambda",
        help="train one run per reconstruction weight",
        formatter_class=formatter,
    )
    sweep.add_argument("--config", type=Path, required=True)
    sweep.add_argument(
        "--lambdas",
        default="0,0.5,1,2",
        help="comma-separated reconstruction weights",
    )
    sweep.add_argument("--out", type=Path, default=None, help="summary CSV")
    sweep.set_defaults(handler=commands.sweep)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=get_settings().log_level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    handler: Callable[[argparse.Namespace], int] = args.handler
    try:
        return handler(args)
    except (DiffumaError, OSError) as e:
        code = exit_code_for(e)
        logger.error("%s", e)  # noqa: TRY400
        sys.stderr.write(f"diffuma: error: {e}\n")
        return int(code)


if __name__ == "__main__":
    sys.exit(main())
