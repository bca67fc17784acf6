"""Plain-text experiment configs.

Format::

    # comment
    [data]
    shape = gaussian_blobs
    class_means = 1, 0; 0, 1; -1, 0
    [trainer]
    epochs = 60
    [output]
    seeds = 0, 1, 2

Sections ``[data]`` and ``[trainer]`` are required, ``[output]`` optional.
Unknown or duplicate keys and malformed values raise ``ConfigError`` with
the 1-based line number.
"""

from dataclasses import dataclass, field, fields

import numpy as np

from .alignment import SIMILARITY_TAGS
from .datagen import SHAPES, DomainShiftSpec
from .errors import ArgumentError, ConfigError
from .network import ACTIVATIONS
from .trainer import METRICS, TrainerConfig


def _parse_bool(text):
    low = text.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_int(text):
    return int(text)


def _parse_float(text):
    v = float(text)
    if v != v or v in (float("inf"), float("-inf")):
        raise ValueError("value must be finite")
    return v


def _list_of(conv):
    def parse(text):
        items = [t.strip() for t in text.split(",")]
        if not items or any(not t for t in items):
            raise ValueError(f"malformed list {text!r}")
        return tuple(conv(t) for t in items)
    return parse


def _parse_matrix(text):
    rows = [_list_of(_parse_float)(r) for r in text.split(";")]
    if len({len(r) for r in rows}) != 1:
        raise ValueError("ragged matrix rows")
    return np.array(rows, dtype=np.float64)


def _choice(options):
    def parse(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text
    return parse


def _str(text):
    if not text:
        raise ValueError("empty value")
    return text


DATA_GENERATOR_KEYS = {
    "shape": _choice(SHAPES),
    "classes": _parse_int,
    "dim": _parse_int,
    "samples_per_class": _parse_int,
    "class_means": _parse_matrix,
    "class_stddev": _parse_float,
    "target_rotation_deg": _parse_float,
    "target_translation": _list_of(_parse_float),
    "target_scale": _parse_float,
    "target_noise_std": _parse_float,
    "seed": _parse_int,
}
DATA_CSV_KEYS = {
    "source_csv": _str,
    "target_csv": _str,
    "target_has_labels": _parse_bool,
}
TRAINER_KEYS = {
    "lambda_ssc": _parse_float,
    "lambda_intra": _parse_float,
    "lambda_inter": _parse_float,
    "metric": _choice(METRICS),
    "similarity": _choice(SIMILARITY_TAGS),
    "gamma": _parse_float,
    "target_norm": _parse_float,
    "margin": _parse_float,
    "center_alpha": _parse_float,
    "batch_size": _parse_int,
    "epochs": _parse_int,
    "learning_rate": _parse_float,
    "schedule_mu": _parse_float,
    "schedule_enabled": _parse_bool,
    "seed": _parse_int,
    "layer_dims": _list_of(_parse_int),
    "hidden_activation": _choice(ACTIVATIONS),
    "mmd_bandwidths": _list_of(_parse_float),
    "cmd_order": _parse_int,
}
OUTPUT_KEYS = {
    "directory": _str,
    "emit_svg": _parse_bool,
    "emit_features": _parse_bool,
    "seeds": _list_of(_parse_int),
}
SECTIONS = {
    "data": {**DATA_GENERATOR_KEYS, **DATA_CSV_KEYS},
    "trainer": TRAINER_KEYS,
    "output": OUTPUT_KEYS,
}


@dataclass
class OutputConfig:
    directory: str = "runs"
    emit_svg: bool = True
    emit_features: bool = False
    seeds: tuple = None


@dataclass
class ExperimentConfig:
    trainer: TrainerConfig
    data: DomainShiftSpec = None
    source_csv: str = None
    target_csv: str = None
    target_has_labels: bool = True
    output: OutputConfig = field(default_factory=OutputConfig)

    @property
    def seeds(self):
        return tuple(self.output.seeds) if self.output.seeds else (self.trainer.seed,)


def parse_config(text):
    """Parse config text into an ``ExperimentConfig`` with defaults filled in."""
    values = {name: {} for name in SECTIONS}
    lines_of = {name: {} for name in SECTIONS}
    header_line = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw.strip()!r}", lineno)
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]", lineno)
            if section in header_line:
                raise ConfigError(f"duplicate section [{section}]", lineno)
            header_line[section] = lineno
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        if section is None:
            raise ConfigError("key outside of any section", lineno)
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        schema = SECTIONS[section]
        if key not in schema:
            raise ConfigError(f"unknown key {key!r} in [{section}]", lineno)
        if key in values[section]:
            raise ConfigError(f"duplicate key {key!r} in [{section}]", lineno)
        try:
            values[section][key] = schema[key](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", lineno) from None
        lines_of[section][key] = lineno

    for required in ("data", "trainer"):
        if required not in header_line:
            raise ConfigError(f"missing required section [{required}]")

    data_vals = values["data"]
    csv_keys = set(data_vals) & set(DATA_CSV_KEYS)
    gen_keys = set(data_vals) & set(DATA_GENERATOR_KEYS)
    if csv_keys and gen_keys:
        line = max(lines_of["data"][k] for k in data_vals)
        raise ConfigError("[data] takes either generator keys or csv paths, not both", line)

    def build(cls, section, kwargs):
        try:
            return cls(**kwargs)
        except (ArgumentError, TypeError) as exc:
            raise ConfigError(f"[{section}] {exc}", header_line.get(section)) from None

    trainer = build(TrainerConfig, "trainer", values["trainer"])
    output = build(OutputConfig, "output", values["output"])
    if csv_keys:
        for k in ("source_csv", "target_csv"):
            if k not in data_vals:
                raise ConfigError(f"[data] csv mode needs {k}", header_line["data"])
        return ExperimentConfig(trainer, None, data_vals["source_csv"], data_vals["target_csv"],
                                data_vals.get("target_has_labels", True), output)
    data = build(DomainShiftSpec, "data", data_vals)
    return ExperimentConfig(trainer, data, output=output)


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, np.ndarray):
        if value.ndim == 2:
            return "; ".join(", ".join(repr(float(v)) for v in row) for row in value)
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, (tuple, list)):
        return ", ".join(_fmt(v) for v in value)
    return str(value)


def dump_config(config):
    """Canonical text form; ``parse_config(dump_config(c))`` reproduces ``c``."""
    out = ["[data]"]
    if config.data is not None:
        for f in fields(DomainShiftSpec):
            out.append(f"{f.name} = {_fmt(getattr(config.data, f.name))}")
    else:
        out.append(f"source_csv = {config.source_csv}")
        out.append(f"target_csv = {config.target_csv}")
        out.append(f"target_has_labels = {_fmt(config.target_has_labels)}")
    out.append("")
    out.append("[trainer]")
    for f in fields(TrainerConfig):
        v = getattr(config.trainer, f.name)
        if v is not None:
            out.append(f"{f.name} = {_fmt(v)}")
    out.append("")
    out.append("[output]")
    for f in fields(OutputConfig):
        v = getattr(config.output, f.name)
        if v is not None:
            out.append(f"{f.name} = {_fmt(v)}")
    return "\n".join(out) + "\n"
