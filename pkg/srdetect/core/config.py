"""Experiment configuration: JSON5 files, strict validation, effective dumps.

A config file is one JSON5 object with a section per concern::

    {
      model: {name: "exponential", theta: 2.0},
      procedure: {kind: "sr-r", head_start: 0.63244, threshold: 1.66485},
      numerics: {nodes: 256, scheme: "gauss_legendre"},
      simulation: {runs: 100000, seed: 7, nu: "inf"},
      output: {dir: "out"},
    }

Every section is optional; missing keys take the defaults below. CLI flags
override file values (see ``merge``). Validation is strict: unknown keys
and ill-typed values are errors, and all of them are reported together.
"""

import dataclasses
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any

import json5


class ConfigError(Exception):
    """Raised when config file is invalid."""


OUTPUT_DIR_ENV = "SRDETECT_OUTPUT_DIR"

PROCEDURE_KINDS = ("sr", "sr-r", "srp")
SCHEMES = ("gauss_legendre", "trapezoid")


def load_config(path: str) -> dict:
    """Load a config file and check its top-level shape.

    Section contents are validated by ``ExperimentConfig.from_dict``.
    """
    if not os.path.isfile(path):
        raise ConfigError(f"Config file not found: {path}")

    with open(path) as f:
        try:
            config = json5.load(f)
        except ValueError as e:
            raise ConfigError(f"Invalid JSON5 in {path}: {e}") from e

    if not isinstance(config, dict):
        raise ConfigError("Config must be a JSON object")
    return config


def check_keys(obj: dict, *, required: set[str], context: str,
               optional: set[str] = frozenset()) -> list[str]:
    """Strict key check for config sections.

    Everything not explicitly optional is required, and keys outside the
    schema are rejected.

    Returns:
        One message per missing / unknown key set (empty when clean).
    """
    problems = []
    missing = required - obj.keys()
    if missing:
        problems.append(
            f"{context}: missing required key(s): {', '.join(sorted(missing))}"
        )
    unknown = obj.keys() - required - optional
    if unknown:
        problems.append(
            f"{context}: unknown key(s): {', '.join(sorted(unknown))}"
        )
    return problems


def merge(base: dict, override: dict) -> dict:
    """Deep-merge ``override`` into a copy of ``base``.

    Nested dicts merge key by key; any other value replaces the base value.
    """
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge(out[key], value)
        else:
            out[key] = value
    return out


def _is_int(v: Any) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_real(v: Any) -> bool:
    return (_is_int(v) or isinstance(v, float)) and math.isfinite(v)


@dataclass(frozen=True)
class ProcedureConfig:
    kind: str = "sr"
    head_start: float = 0.0
    threshold: float | None = None
    gamma: float | None = None


@dataclass(frozen=True)
class NumericsConfig:
    nodes: int = 256
    scheme: str = "gauss_legendre"
    nu_max: int | None = None
    tol: float = 1e-12
    max_iter: int = 100_000


@dataclass(frozen=True)
class SimulationConfig:
    runs: int = 10_000
    seed: int = 0
    cap: int = 10_000_000
    # None stands for an infinite changepoint (no change ever happens).
    nu: int | None = None
    workers: int = 1
    chunk_size: int = 65_536


@dataclass(frozen=True)
class OutputConfig:
    dir: str | None = None


def _check_procedure(d: dict, problems: list[str]) -> None:
    ctx = "procedure"
    if "kind" in d and d["kind"] not in PROCEDURE_KINDS:
        problems.append(f"{ctx}.kind: must be one of {', '.join(PROCEDURE_KINDS)}")
    if "head_start" in d and not (_is_real(d["head_start"]) and d["head_start"] >= 0):
        problems.append(f"{ctx}.head_start: must be a nonnegative number")
    for key in ("threshold", "gamma"):
        v = d.get(key)
        if v is not None and not (_is_real(v) and v > 0):
            problems.append(f"{ctx}.{key}: must be a positive number or null")
    gamma = d.get("gamma")
    if _is_real(gamma) and gamma <= 1:
        problems.append(f"{ctx}.gamma: must exceed 1")


def _check_numerics(d: dict, problems: list[str]) -> None:
    ctx = "numerics"
    if "nodes" in d and not (_is_int(d["nodes"]) and d["nodes"] >= 8):
        problems.append(f"{ctx}.nodes: must be an integer >= 8")
    if "scheme" in d and d["scheme"] not in SCHEMES:
        problems.append(f"{ctx}.scheme: must be one of {', '.join(SCHEMES)}")
    nu_max = d.get("nu_max")
    if nu_max is not None and not (_is_int(nu_max) and nu_max >= 0):
        problems.append(f"{ctx}.nu_max: must be a nonnegative integer or null")
    if "tol" in d and not (_is_real(d["tol"]) and d["tol"] > 0):
        problems.append(f"{ctx}.tol: must be a positive number")
    if "max_iter" in d and not (_is_int(d["max_iter"]) and d["max_iter"] >= 1):
        problems.append(f"{ctx}.max_iter: must be a positive integer")


def _check_simulation(d: dict, problems: list[str]) -> None:
    ctx = "simulation"
    for key in ("runs", "cap", "workers", "chunk_size"):
        if key in d and not (_is_int(d[key]) and d[key] >= 1):
            problems.append(f"{ctx}.{key}: must be a positive integer")
    if "seed" in d and not (_is_int(d["seed"]) and d["seed"] >= 0):
        problems.append(f"{ctx}.seed: must be a nonnegative integer")
    nu = d.get("nu")
    if nu is not None and nu != "inf" and not (_is_int(nu) and nu >= 0):
        problems.append(f"{ctx}.nu: must be a nonnegative integer or \"inf\"")


def _check_output(d: dict, problems: list[str]) -> None:
    v = d.get("dir")
    if v is not None and not isinstance(v, str):
        problems.append("output.dir: must be a string or null")


_SECTIONS = {
    "procedure": (ProcedureConfig, _check_procedure),
    "numerics": (NumericsConfig, _check_numerics),
    "simulation": (SimulationConfig, _check_simulation),
    "output": (OutputConfig, _check_output),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully validated, defaults-filled configuration of one command run."""

    model: dict = field(default_factory=lambda: {"name": "exponential", "theta": 2.0})
    procedure: ProcedureConfig = field(default_factory=ProcedureConfig)
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        """Validate a raw config mapping and fill in defaults.

        Raises:
            ConfigError: listing every offending field, one per line.
        """
        from srdetect.models import model_config_problems

        if not isinstance(data, dict):
            raise ConfigError("Config must be a JSON object")
        problems = check_keys(
            data, required=set(), optional={"model", *_SECTIONS},
            context="config",
        )

        model = data.get("model", cls().model)
        if isinstance(model, dict):
            problems.extend(model_config_problems(model))
        else:
            problems.append("model: must be an object")

        sections = {}
        for name, (section_cls, checker) in _SECTIONS.items():
            raw = data.get(name, {})
            if not isinstance(raw, dict):
                problems.append(f"{name}: must be an object")
                continue
            names = {f.name for f in dataclasses.fields(section_cls)}
            problems.extend(check_keys(raw, required=set(), optional=names, context=name))
            checker(raw, problems)
            sections[name] = raw

        if problems:
            raise ConfigError("Invalid config:\n  " + "\n  ".join(problems))

        sim = dict(sections["simulation"])
        if sim.get("nu") == "inf":
            sim["nu"] = None
        numerics = dict(sections["numerics"])
        for key in ("tol",):
            if key in numerics:
                numerics[key] = float(numerics[key])
        procedure = dict(sections["procedure"])
        for key in ("head_start", "threshold", "gamma"):
            if procedure.get(key) is not None:
                procedure[key] = float(procedure[key])
        return cls(
            model=dict(model),
            procedure=ProcedureConfig(**procedure),
            numerics=NumericsConfig(**numerics),
            simulation=SimulationConfig(**sim),
            output=OutputConfig(**sections["output"]),
        )

    def to_dict(self) -> dict:
        """Plain-data form; ``from_dict(to_dict())`` reproduces ``self``."""
        out = {
            "model": dict(self.model),
            "procedure": dataclasses.asdict(self.procedure),
            "numerics": dataclasses.asdict(self.numerics),
            "simulation": dataclasses.asdict(self.simulation),
            "output": dataclasses.asdict(self.output),
        }
        if out["simulation"]["nu"] is None:
            out["simulation"]["nu"] = "inf"
        return out

    def dumps(self) -> str:
        """Canonical single-line JSON (valid JSON5) of the effective config."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def build_model(self):
        from srdetect.models import build_model

        return build_model(self.model)


def resolve_output_path(path: str, config: ExperimentConfig,
                        environ: dict | None = None) -> str:
    """Anchor a relative output path at ``output.dir`` or $SRDETECT_OUTPUT_DIR."""
    if os.path.isabs(path):
        return path
    if environ is None:
        environ = dict(os.environ)
    base = config.output.dir or environ.get(OUTPUT_DIR_ENV)
    return os.path.join(base, path) if base else path
