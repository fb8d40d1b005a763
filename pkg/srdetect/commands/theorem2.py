"""theorem2: SRP against the equalized SR-r procedure in E(1,2), in closed form.

At γ = 2 the row is checked against the published values; at any γ the
calibration identities must hold. A failed check exits with status 3.
"""

import argparse
import logging
import math

from srdetect import exact_exp
from srdetect.commands.common import add_out_arg, emit
from srdetect.core.config import ExperimentConfig
from srdetect.core.errors import AcceptanceError
from srdetect.core.output import render_csv

logger = logging.getLogger(__name__)

HELP = "Reproduce the E(1,2) SRP vs SR-r comparison at one ARL level"
COLUMNS = ["gamma", "B", "E0Tsrp", "A", "rA", "JPsrr", "gap"]
IDENTITY_TOL = 1e-10


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--gamma", type=float, help="Target ARL to false alarm (default: 2)")
    add_out_arg(parser, "theorem2.csv")


def check_row(row: exact_exp.Theorem2Row) -> list[str]:
    """Every way ``row`` fails its acceptance checks."""
    failures = []
    if not row.gap > 0:
        failures.append(f"J_P(SRP)={row.E0Tsrp!r} does not exceed J_P(SR-r)={row.JPsrr!r}")
    arl_srp = exact_exp.srp_arl_exact(row.B)
    arl_srr = exact_exp.phi_exact(row.rA, row.A)
    for label, arl in (("SRP", arl_srp), ("SR-r", arl_srr)):
        if abs(arl - row.gamma) > IDENTITY_TOL:
            failures.append(f"{label} ARL {arl!r} misses γ={row.gamma!r}")
    if math.isclose(row.gamma, 2.0):
        for key, dev in exact_exp.reference_deviations(row).items():
            failures.append(f"{key}={getattr(row, key)!r} deviates by {dev:.3e}")
    return failures


def run(args: argparse.Namespace, config: ExperimentConfig) -> int:
    gamma = config.procedure.gamma if config.procedure.gamma is not None else 2.0
    row = exact_exp.theorem2_row(gamma)
    emit(render_csv(COLUMNS, [row], config, "theorem2"), args.out, config, "theorem2")
    failures = check_row(row)
    if failures:
        raise AcceptanceError("theorem2 checks failed:\n  " + "\n  ".join(failures))
    logger.info("theorem2 at γ=%s: J_P gap %s", gamma, row.gap)
    return 0
