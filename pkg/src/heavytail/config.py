"""Flat key=value experiment configuration with one typed schema.

A config file is plain text: one ``key = value`` assignment per line,
``#`` comments and blank lines ignored.  Every experiment has a fixed
schema; keys outside it are rejected by name, so a typo cannot silently
fall back to a default.  The ``seed`` key is mandatory because every
output artifact must be reproducible from the file alone.

Values are typed per key: integers, reals, booleans (``true``/``false``),
bare strings, or comma-separated lists of numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .errors import ConfigError

__all__ = [
    "ExperimentConfig",
    "EXPERIMENTS",
    "parse_config_text",
    "load_config",
    "validate_config",
    "schema_help",
]

# value kinds understood by the parser
_INT = "int"
_REAL = "real"
_BOOL = "bool"
_STR = "str"
_REALS = "real_list"
_INTS = "int_list"


@dataclass(frozen=True)
class _Field:
    kind: str
    default: object = None
    required: bool = False
    choices: Optional[Tuple[str, ...]] = None
    minimum: Optional[float] = None


def _common_schema() -> Dict[str, _Field]:
    return {
        "experiment": _Field(_STR),
        "seed": _Field(_INT, required=True, minimum=0),
        "output_dir": _Field(_STR, default="."),
        "workers": _Field(_INT, default=1, minimum=1),
    }


_SCHEMAS: Dict[str, Dict[str, _Field]] = {
    "tails": {
        "lambda_min": _Field(_REAL, default=1.0, minimum=1e-6),
        "lambda_max": _Field(_REAL, default=1e4),
        "lambda_count": _Field(_INT, default=25, minimum=2),
    },
    "coupling": {
        "steps": _Field(_INT, default=1_000_000, minimum=100),
        "blocks": _Field(_INT, default=1_000_000, minimum=100),
        "lambda_grid": _Field(_REALS, default=(10.0, 20.0, 50.0)),
        "n_max": _Field(_INT, default=30, minimum=2),
        "runs_per_probe": _Field(_INT, default=20_000, minimum=100),
    },
    "spectral": {
        "grid_sizes": _Field(_INTS, default=(256, 512, 1024)),
        "n_trunc": _Field(_REALS, default=(1e2, 1e3, 1e4)),
        "tol": _Field(_REAL, default=1e-10, minimum=0.0),
        "save_operator": _Field(_BOOL, default=False),
    },
    "converge": {
        "model": _Field(_STR, default="pareto",
                        choices=("pareto", "reciprocal", "boltzmann")),
        "alpha": _Field(_REAL, default=1.5),
        "symmetric": _Field(_BOOL, default=True),
        "mode": _Field(_STR, default="DiscreteSum",
                       choices=("DiscreteSum", "WeightedSum",
                                "ContinuousFunctional")),
        "centering": _Field(_STR, default="None",
                            choices=("None", "Mean", "TruncatedCN")),
        "n_schedule": _Field(_INTS, default=(100, 1000, 10000)),
        "replicas": _Field(_INT, default=10_000, minimum=100),
        "t": _Field(_REAL, default=1.0),
        "weights": _Field(_STR, default="exponential",
                          choices=("constant", "exponential")),
        "bootstrap": _Field(_INT, default=200, minimum=10),
        "write_samples": _Field(_BOOL, default=False),
    },
    "kinetic": {
        "n_schedule": _Field(_REALS, default=(1e3, 1e4, 1e5)),
        "t": _Field(_REAL, default=1.0),
        "paths": _Field(_INT, default=10_000, minimum=2),
        "x_probes": _Field(_REALS, default=(0.0, 0.5, -0.5)),
        "k_probes": _Field(_REALS, default=(0.125, -0.125, 0.375, -0.375)),
        "radius": _Field(_REAL, default=8.0, minimum=1e-6),
        "compare": _Field(_BOOL, default=True),
    },
    "fracdiff": {
        "t": _Field(_REAL, default=1.0, minimum=0.0),
        "diffusivity": _Field(_REAL, default=0.0),
        "box": _Field(_REAL, default=512.0, minimum=1.0),
        "grid": _Field(_INT, default=2 ** 14, minimum=64),
        "profile": _Field(_STR, default="gaussian",
                          choices=("gaussian", "bump")),
        "width": _Field(_REAL, default=4.0, minimum=1e-6),
        "radius": _Field(_REAL, default=8.0, minimum=1e-6),
    },
}

EXPERIMENTS = tuple(sorted(_SCHEMAS))


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment: name, reproducibility seed, and typed
    parameters."""

    experiment: str
    seed: int
    output_dir: str
    workers: int
    params: Dict[str, object] = field(default_factory=dict)

    def echo(self) -> Dict[str, object]:
        """Round-trippable view of every effective setting."""
        out = {"experiment": self.experiment, "seed": self.seed,
               "output_dir": self.output_dir, "workers": self.workers}
        for k in sorted(self.params):
            v = self.params[k]
            out[k] = list(v) if isinstance(v, tuple) else v
        return out


def parse_config_text(text: str) -> Dict[str, str]:
    """Raw ``key = value`` pairs, order-insensitive, duplicates rejected."""
    raw: Dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(
                f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, value = stripped.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


def _convert(key: str, value: str, spec: _Field):
    try:
        if spec.kind == _INT:
            out = int(value.replace("_", ""), 0)
        elif spec.kind == _REAL:
            out = float(value)
        elif spec.kind == _BOOL:
            low = value.lower()
            if low not in ("true", "false"):
                raise ValueError(value)
            out = low == "true"
        elif spec.kind == _STR:
            out = value
        elif spec.kind == _REALS:
            out = tuple(float(p) for p in value.split(",") if p.strip())
            if not out:
                raise ValueError(value)
        elif spec.kind == _INTS:
            out = tuple(int(float(p)) for p in value.split(",") if p.strip())
            if not out:
                raise ValueError(value)
        else:  # pragma: no cover - schema definition error
            raise ConfigError(f"bad schema kind {spec.kind}")
    except (ValueError, TypeError):
        raise ConfigError(
            f"key {key!r}: cannot parse {value!r} as {spec.kind}") from None
    if spec.choices is not None and out not in spec.choices:
        raise ConfigError(
            f"key {key!r}: {out!r} not one of {sorted(spec.choices)}")
    if spec.minimum is not None:
        vals = out if isinstance(out, tuple) else (out,)
        if any(v < spec.minimum for v in vals):
            raise ConfigError(f"key {key!r}: value below {spec.minimum}")
    return out


def validate_config(experiment: str, raw: Dict[str, str],
                    seed_override: Optional[int] = None,
                    workers_override: Optional[int] = None) -> ExperimentConfig:
    """Typed validation of a raw mapping against one experiment schema."""
    if experiment not in _SCHEMAS:
        raise ConfigError(
            f"unknown experiment {experiment!r}; choose from {list(EXPERIMENTS)}")
    schema = dict(_common_schema())
    schema.update(_SCHEMAS[experiment])
    values: Dict[str, object] = {}
    for key, value in raw.items():
        if key not in schema:
            raise ConfigError(
                f"unknown key {key!r} for experiment {experiment!r}")
        values[key] = _convert(key, value, schema[key])
    if seed_override is not None:
        values["seed"] = seed_override
    if workers_override is not None:
        values["workers"] = workers_override
    declared = values.pop("experiment", None)
    if declared is not None and declared != experiment:
        raise ConfigError(
            f"config declares experiment {declared!r} but {experiment!r} was requested")
    for key, spec in schema.items():
        if key == "experiment":
            continue
        if key not in values:
            if spec.required:
                raise ConfigError(f"missing required key {key!r}")
            values[key] = spec.default
    seed = values.pop("seed")
    if seed < 0 or seed >= 2 ** 64:
        raise ConfigError("seed must fit in 64 unsigned bits")
    out_dir = values.pop("output_dir")
    workers = values.pop("workers")
    return ExperimentConfig(experiment=experiment, seed=int(seed),
                            output_dir=str(out_dir), workers=int(workers),
                            params=values)


def load_config(path: str, experiment: str,
                seed_override: Optional[int] = None,
                workers_override: Optional[int] = None) -> ExperimentConfig:
    try:
        with open(path, "r") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    return validate_config(experiment, parse_config_text(text),
                           seed_override, workers_override)


def schema_help(experiment: str) -> List[str]:
    """One line per key: name, type, default or REQUIRED."""
    schema = dict(_common_schema())
    schema.update(_SCHEMAS.get(experiment, {}))
    lines = []
    for key in sorted(schema):
        spec = schema[key]
        tail = "REQUIRED" if spec.required else f"default {spec.default!r}"
        extra = f" choices {sorted(spec.choices)}" if spec.choices else ""
        lines.append(f"{key} ({spec.kind}) {tail}{extra}")
    return lines
