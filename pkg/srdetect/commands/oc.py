"""oc: SR-r operating characteristics on the quadrature nodes."""

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
from srdetect.fredholm import operating_characteristics

logger = logging.getLogger(__name__)

HELP = "Solve for phi, delta0, psi and CADD_nu as functions of the head start"


def add_arguments(parser: argparse.ArgumentParser) -> None:
    add_model_args(parser)
    parser.add_argument("--threshold", type=float, help="Threshold A")
    add_numerics_args(parser)
    parser.add_argument("--nu-max", type=int, help="Last changepoint tabulated (default: until CADD settles)")
    add_out_arg(parser, "oc.csv")


def columns(nu_max: int) -> list[str]:
    return ["r", "phi", "delta0", "psi"] + [f"cadd_{nu}" for nu in range(1, nu_max + 1)]


def run(args: argparse.Namespace, config: ExperimentConfig) -> int:
    model = config.build_model()
    A = require_threshold(config)
    oc = operating_characteristics(model, A, grid_spec(config), config.numerics.nu_max)
    cadds = [oc.cadd(nu).values for nu in range(1, oc.nu_max + 1)]
    rows = []
    for i, r in enumerate(oc.grid.nodes):
        rows.append([r, oc.phi.values[i], oc.delta0.values[i], oc.psi.values[i],
                     *(c[i] for c in cadds)])
    logger.info("oc at A=%s on %d nodes, ν ≤ %d", A, oc.grid.size, oc.nu_max)
    emit(render_csv(columns(oc.nu_max), rows, config, "oc"), args.out, config, "oc")
    return 0
