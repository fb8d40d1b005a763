"""calibrate: threshold (and optionally equalizer head start) for a target ARL."""

import argparse

from srdetect.calibrate import calibrate_equalized, calibrate_threshold, srp_characteristics
from srdetect.commands.common import add_model_args, add_numerics_args, add_out_arg, emit, grid_spec
from srdetect.core.config import ExperimentConfig
from srdetect.core.output import render_json
from srdetect.fredholm import arl_false_alarm

HELP = "Calibrate a threshold to ARL gamma"


def add_arguments(parser: argparse.ArgumentParser) -> None:
    add_model_args(parser)
    parser.add_argument("--procedure", choices=("sr", "sr-r", "srp"), help="Procedure to calibrate")
    parser.add_argument("--gamma", type=float, help="Target ARL to false alarm")
    parser.add_argument("--head-start", type=float, help="Fixed head start for sr-r")
    parser.add_argument("--equalize", action="store_true",
                        help="Search the head start too, making SR-r an equalizer")
    add_numerics_args(parser)
    add_out_arg(parser, "calibration.json")


def run(args: argparse.Namespace, config: ExperimentConfig) -> int:
    model = config.build_model()
    proc = config.procedure
    if proc.gamma is None:
        raise ValueError("procedure.gamma is required (--gamma)")
    spec = grid_spec(config)
    result = {"procedure": proc.kind, "gamma": proc.gamma}
    if args.equalize:
        if proc.kind != "sr-r":
            raise ValueError("--equalize applies to --procedure sr-r only")
        eq = calibrate_equalized(model, proc.gamma, spec, nu_max=config.numerics.nu_max)
        result.update(threshold=eq.threshold, head_start=eq.head_start,
                      arl=eq.arl, spread=eq.spread)
    elif proc.kind == "srp":
        B = calibrate_threshold(model, "srp", proc.gamma, spec)
        result.update(threshold=B, head_start=None, arl=srp_characteristics(model, B, spec).arl)
    else:
        r = proc.head_start if proc.kind == "sr-r" else 0.0
        A = calibrate_threshold(model, proc.kind, proc.gamma, spec, head_start=r)
        result.update(threshold=A, head_start=r, arl=arl_false_alarm(model, A, spec)(r))
    emit(render_json(result, config, "calibrate"), args.out, config, "calibrate")
    return 0
