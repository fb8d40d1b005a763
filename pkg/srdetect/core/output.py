"""CSV and JSON writers that stamp every output with its provenance.

CSV files start with ``#`` lines naming the library version, the command
and the effective config; JSON documents carry the same under ``meta``.
Floats are written with 12 significant digits in CSV and as shortest
round-trip reprs in JSON, so identical inputs give identical bytes.
"""

import csv
import io
import json
import logging
import os
from typing import Iterable, Sequence

from srdetect import __version__
from srdetect.core.config import ExperimentConfig

logger = logging.getLogger(__name__)

FLOAT_FORMAT = ".12g"


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, FLOAT_FORMAT)
    if hasattr(value, "item"):  # numpy scalar
        return format_value(value.item())
    return str(value)


def meta(config: ExperimentConfig, command: str) -> dict:
    return {"version": __version__, "command": command, "config": config.to_dict()}


def header_lines(config: ExperimentConfig, command: str) -> list[str]:
    return [
        f"# srdetect {__version__}",
        f"# command: {command}",
        f"# config: {config.dumps()}",
    ]


def render_csv(columns: Sequence[str], rows: Iterable[Sequence],
               config: ExperimentConfig, command: str,
               extra_header: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for line in header_lines(config, command) + [f"# {h}" for h in extra_header]:
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} fields, expected {len(columns)}")
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def render_json(data: dict, config: ExperimentConfig, command: str) -> str:
    doc = {"meta": meta(config, command), **data}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def read_csv(path: str) -> tuple[list[str], list[dict[str, str]]]:
    """Header lines (without ``#``) and data rows of a CSV file written by ``write_output``."""
    with open(path) as f:
        lines = f.read().splitlines()
    header = [line[1:].strip() for line in lines if line.startswith("#")]
    body = [line for line in lines if not line.startswith("#")]
    return header, list(csv.DictReader(body))


def _write(path: str, text: str) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(text)


def write_output(path: str, text: str, config: ExperimentConfig, command: str) -> None:
    """Write ``text`` to ``path`` and the effective config to ``<path>.config.json``."""
    _write(path, text)
    _write(path + ".config.json",
           json.dumps(meta(config, command), indent=2, sort_keys=True) + "\n")
    logger.info("wrote %s", path)
