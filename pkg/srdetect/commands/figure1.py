"""figure1: J_P of SRP and of the equalized SR-r procedure against the ARL."""

import argparse
import logging

from srdetect import exact_exp
from srdetect.commands.common import add_out_arg, emit
from srdetect.core.config import ExperimentConfig, resolve_output_path
from srdetect.core.errors import AcceptanceError
from srdetect.core.output import render_csv

logger = logging.getLogger(__name__)

HELP = "Tabulate (and optionally plot) the E(1,2) J_P curves over (1, gamma0)"
COLUMNS = ["arl", "jp_srr", "jp_srp"]


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--points", type=int, default=200, help="Number of ARL levels (default: 200)")
    add_out_arg(parser, "figure1.csv")
    parser.add_argument("--plot", help="Also render the curves to this SVG file")


def render_plot(rows: list[exact_exp.Figure1Row], path: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "srdetect"
    fig, ax = plt.subplots(figsize=(6, 4))
    arl = [row.arl for row in rows]
    ax.plot(arl, [row.jp_srp for row in rows], label="SRP")
    ax.plot(arl, [row.jp_srr for row in rows], label="SR-r at r_A", linestyle="--")
    ax.set_xlabel("ARL to false alarm")
    ax.set_ylabel("supremum ADD")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info("wrote %s", path)


def run(args: argparse.Namespace, config: ExperimentConfig) -> int:
    rows = exact_exp.figure1_rows(args.points)
    emit(render_csv(COLUMNS, rows, config, "figure1"), args.out, config, "figure1")
    if args.plot:
        render_plot(rows, resolve_output_path(args.plot, config))
    bad = [row for row in rows if not row.jp_srp > row.jp_srr]
    if bad:
        raise AcceptanceError(
            f"SRP does not dominate SR-r at {len(bad)} ARL level(s), first at {bad[0].arl!r}"
        )
    return 0
