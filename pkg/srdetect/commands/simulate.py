"""simulate: per-run stopping times, or a Monte Carlo estimate with --estimate."""

import argparse
import logging

from srdetect import montecarlo
from srdetect.commands.common import (
    add_model_args,
    add_numerics_args,
    add_out_arg,
    add_procedure_args,
    changepoint,
    emit,
    head_start,
    resolve_threshold,
)
from srdetect.core.config import ExperimentConfig
from srdetect.core.output import render_csv, render_json

logger = logging.getLogger(__name__)

HELP = "Simulate detector runs and estimate ARL, CADD or integral ADD"
COLUMNS = ["run", "stopping_time", "censored"]
ESTIMATES = ("arl", "cadd", "iradd")


def add_arguments(parser: argparse.ArgumentParser) -> None:
    add_model_args(parser)
    add_procedure_args(parser)
    parser.add_argument("--gamma", type=float, help="Calibrate the threshold to this ARL instead")
    parser.add_argument("--nu", type=changepoint, help="Changepoint: integer or 'inf' (default)")
    parser.add_argument("--runs", type=int, help="Number of runs")
    parser.add_argument("--seed", type=int, help="Root seed")
    parser.add_argument("--cap", type=int, help="Censoring cap on the run length")
    parser.add_argument("--workers", type=int, help="Threads running simulation chunks")
    parser.add_argument("--chunk-size", type=int, help="Runs per chunk (fixes the RNG layout)")
    parser.add_argument("--timeout", type=float, help="Wall-clock budget in seconds")
    parser.add_argument("--estimate", choices=ESTIMATES,
                        help="Print an estimate as JSON instead of per-run records")
    parser.add_argument("--nu-max", type=int, help="Last changepoint of the integral ADD series")
    add_numerics_args(parser)
    add_out_arg(parser, "runs.csv")


def run(args: argparse.Namespace, config: ExperimentConfig) -> int:
    model = config.build_model()
    threshold = resolve_threshold(config, model)
    procedure = head_start(config, model, threshold)
    sim = config.simulation
    opts = montecarlo.SimulationOptions(sim.cap, sim.chunk_size, sim.workers, args.timeout)
    logger.info("simulating %s at threshold %s, %d runs", procedure.describe(), threshold, sim.runs)

    if args.estimate is None:
        batch = montecarlo.simulate_runs(model, procedure, threshold, sim.nu,
                                         sim.runs, sim.seed, opts)
        rows = ([i + 1, int(t), bool(c)]
                for i, (t, c) in enumerate(zip(batch.stopping_times, batch.censored)))
        emit(render_csv(COLUMNS, rows, config, "simulate"), args.out, config, "simulate")
        return 0

    if args.estimate == "arl":
        est = montecarlo.estimate_arl(model, procedure, threshold, sim.runs, sim.seed, opts)
    elif args.estimate == "cadd":
        if sim.nu is None:
            raise ValueError("--estimate cadd needs a finite changepoint (--nu N)")
        est = montecarlo.estimate_cadd(model, procedure, threshold, sim.nu,
                                       sim.runs, sim.seed, opts)
    else:
        est = montecarlo.estimate_integral_add(
            model, procedure, threshold, config.procedure.head_start,
            sim.runs, sim.seed, config.numerics.nu_max, opts,
        )
    result = {"estimate": args.estimate, "procedure": procedure.describe(),
              "threshold": threshold, **est.to_dict()}
    emit(render_json(result, config, "simulate"), args.out, config, "simulate")
    return 0
