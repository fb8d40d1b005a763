"""Command-line entry point: ``srdetect <command> [flags]``.

Config precedence is built-in defaults < ``--config`` file < flags. Logs
go to stderr (or ``--logfile``); results go to stdout or ``--out`` files.

Exit codes: 0 success, 1 invalid input or config, 2 numeric failure,
3 a reproduced number missed its reference.
"""

import argparse
import logging
import sys

from srdetect import __version__
from srdetect.commands import COMMANDS
from srdetect.commands.common import overrides
from srdetect.core.config import ConfigError, ExperimentConfig, load_config, merge
from srdetect.core.errors import AcceptanceError, NumericalError
from srdetect.core.executor import SimulationTimeout

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERIC = 2
EXIT_ACCEPTANCE = 3


class _Short(float):
    def __str__(self) -> str:
        return format(float(self), ".12g")

    __repr__ = __str__


def _shorten(arg):
    return _Short(arg) if isinstance(arg, float) else arg


class FloatFormatter(logging.Formatter):
    """Formatter that prints float log arguments with 12 significant digits."""

    def format(self, record: logging.LogRecord) -> str:
        if isinstance(record.args, tuple):
            record.args = tuple(_shorten(a) for a in record.args)
        return super().format(record)


def setup_logging(level: int = logging.INFO, *, logfile: str | None = None) -> None:
    for old in [h for h in logging.root.handlers if isinstance(h.formatter, FloatFormatter)]:
        logging.root.removeHandler(old)
    if logfile:
        handler = logging.FileHandler(logfile)
    else:
        handler = logging.StreamHandler()
    handler.setFormatter(FloatFormatter(LOG_FORMAT))
    logging.root.addHandler(handler)
    logging.root.setLevel(level)
    # matplotlib's font manager is chatty at INFO
    logging.getLogger("matplotlib").setLevel(logging.WARNING)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="srdetect",
        description="srdetect - Shiryaev-Roberts change-point detection toolkit",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="Path to config file (JSON5)")
    parser.add_argument("--output-dir", help="Directory for relative --out paths")
    parser.add_argument("--logfile", help="Write logs to this file")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Warnings and errors only")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, module in COMMANDS.items():
        module.add_arguments(sub.add_parser(name, help=module.HELP, description=module.HELP))
    return parser


def _apply(base: dict, override: dict) -> dict:
    out = merge(base, {k: v for k, v in override.items() if k != "model"})
    model = override.get("model")
    if model is None:
        return out
    if isinstance(model, dict) and model.get("name") in (None, base["model"].get("name")):
        out["model"] = merge(base["model"], model)
    else:
        # a different model drops the old model's parameters
        out["model"] = model
    return out


def effective_config(args: argparse.Namespace) -> ExperimentConfig:
    """Defaults, then the config file, then flags."""
    config = ExperimentConfig().to_dict()
    if args.config:
        config = _apply(config, load_config(args.config))
    return ExperimentConfig.from_dict(_apply(config, overrides(args)))


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    setup_logging(level, logfile=args.logfile)

    try:
        config = effective_config(args)
        return COMMANDS[args.command].run(args, config)
    except (ConfigError, ValueError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalError, SimulationTimeout) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except AcceptanceError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_ACCEPTANCE
