"""qsd: quasi-stationary density and CDF on the quadrature nodes."""

import argparse
import logging

from srdetect.commands.common import (
    add_model_args,
    add_numerics_args,
    add_out_arg,
    emit,
    grid_spec,
    require_threshold,
)
from srdetect.core.config import ExperimentConfig
from srdetect.core.output import render_csv
from srdetect.quasi_stationary import solve_qsd

logger = logging.getLogger(__name__)

HELP = "Solve for the quasi-stationary distribution below threshold B"
COLUMNS = ["x", "q", "Q"]


def add_arguments(parser: argparse.ArgumentParser) -> None:
    add_model_args(parser)
    parser.add_argument("--threshold", type=float, help="Threshold B")
    add_numerics_args(parser)
    add_out_arg(parser, "qsd.csv")


def run(args: argparse.Namespace, config: ExperimentConfig) -> int:
    model = config.build_model()
    B = require_threshold(config)
    qsd = solve_qsd(model, B, grid_spec(config), config.numerics.tol, config.numerics.max_iter)
    logger.info("λ_B=%s at B=%s (%d iterations)", qsd.lam, B, qsd.iterations)
    rows = [list(r) for r in zip(qsd.grid.nodes, qsd.density.values, qsd.cdf.values)]
    header = [f"lambda: {qsd.lam:.12g}"]
    if qsd.experimental:
        header.append("experimental: no closed form covers this threshold")
    emit(render_csv(COLUMNS, rows, config, "qsd", extra_header=header), args.out, config, "qsd")
    return 0
