"""Flags shared by several subcommands and their mapping onto config sections."""

import argparse
import sys

from srdetect.calibrate import calibrate_threshold
from srdetect.core.config import PROCEDURE_KINDS, SCHEMES, ExperimentConfig, resolve_output_path
from srdetect.core.output import write_output
from srdetect.fredholm import GridSpec
from srdetect.models import ChangeModel, available_models
from srdetect.procedures import HeadStart
from srdetect.quasi_stationary import solve_qsd

# argparse dest -> (config section, key)
_FLAG_KEYS = {
    "procedure": ("procedure", "kind"),
    "head_start": ("procedure", "head_start"),
    "threshold": ("procedure", "threshold"),
    "gamma": ("procedure", "gamma"),
    "nodes": ("numerics", "nodes"),
    "scheme": ("numerics", "scheme"),
    "nu_max": ("numerics", "nu_max"),
    "tol": ("numerics", "tol"),
    "max_iter": ("numerics", "max_iter"),
    "runs": ("simulation", "runs"),
    "seed": ("simulation", "seed"),
    "cap": ("simulation", "cap"),
    "nu": ("simulation", "nu"),
    "workers": ("simulation", "workers"),
    "chunk_size": ("simulation", "chunk_size"),
}


def changepoint(value: str):
    """``--nu`` values: a nonnegative integer or ``inf``."""
    if value == "inf":
        return "inf"
    try:
        nu = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'inf', got {value!r}") from None
    if nu < 0:
        raise argparse.ArgumentTypeError("changepoint must be nonnegative")
    return nu


def add_model_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", choices=available_models(), help="Observation model")
    parser.add_argument("--theta", type=float, help="Post-change rate of the exponential model")
    parser.add_argument("--mu", type=float, help="Post-change mean of the gaussian model")


def add_numerics_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--nodes", type=int, help="Quadrature nodes (default: 256)")
    parser.add_argument("--scheme", choices=SCHEMES, help="Quadrature rule")
    parser.add_argument("--tol", type=float, help="Power-iteration tolerance")
    parser.add_argument("--max-iter", type=int, help="Power-iteration cap")


def add_procedure_args(parser: argparse.ArgumentParser, kinds=PROCEDURE_KINDS) -> None:
    parser.add_argument("--procedure", choices=kinds, help="Detection procedure")
    parser.add_argument("--head-start", type=float, help="Deterministic head start r")
    parser.add_argument("--threshold", type=float, help="Alarm threshold (A or B)")


def add_out_arg(parser: argparse.ArgumentParser, example: str) -> None:
    parser.add_argument("--out", help=f"Output file, e.g. {example} (default: stdout)")


def overrides(args: argparse.Namespace) -> dict:
    """Config fragment holding every flag the user actually set."""
    out: dict = {}
    for dest, (section, key) in _FLAG_KEYS.items():
        value = getattr(args, dest, None)
        if value is not None:
            out.setdefault(section, {})[key] = value
    model = getattr(args, "model", None)
    params = {k: getattr(args, k, None) for k in ("theta", "mu")}
    params = {k: v for k, v in params.items() if v is not None}
    if model is not None or params:
        out["model"] = {"name": model, **params} if model else params
    if getattr(args, "output_dir", None):
        out["output"] = {"dir": args.output_dir}
    return out


def grid_spec(config: ExperimentConfig) -> GridSpec:
    return GridSpec(config.numerics.nodes, config.numerics.scheme)


def require_threshold(config: ExperimentConfig) -> float:
    threshold = config.procedure.threshold
    if threshold is None:
        raise ValueError("procedure.threshold is required (--threshold)")
    return threshold


def resolve_threshold(config: ExperimentConfig, model: ChangeModel) -> float:
    """The configured threshold, or one calibrated to procedure.gamma."""
    proc = config.procedure
    if proc.threshold is not None:
        return proc.threshold
    if proc.gamma is None:
        raise ValueError("set procedure.threshold (--threshold) or procedure.gamma (--gamma)")
    return calibrate_threshold(model, proc.kind, proc.gamma, grid_spec(config),
                               head_start=proc.head_start)


def head_start(config: ExperimentConfig, model: ChangeModel, threshold: float) -> HeadStart:
    kind = config.procedure.kind
    if kind == "srp":
        qsd = solve_qsd(model, threshold, grid_spec(config),
                        config.numerics.tol, config.numerics.max_iter)
        return HeadStart.quasi_stationary(qsd)
    if kind == "sr":
        return HeadStart.deterministic(0.0)
    return HeadStart.deterministic(config.procedure.head_start)


def emit(text: str, out: str | None, config: ExperimentConfig, command: str) -> None:
    """Write ``text`` to ``--out`` (with its config sidecar) or stdout."""
    if out:
        write_output(resolve_output_path(out, config), text, config, command)
    else:
        sys.stdout.write(text)
