"""Declarative pipeline configuration: TOML file, TARMAC_* environment
overrides, then command-line flags, in increasing precedence.

The schema is flat scalars grouped into per-module sections, so the effective
config round-trips parse -> serialize -> parse unchanged.
"""

from __future__ import annotations

import copy
import json
from typing import Any, Mapping, Optional

import tomli

from .errors import ConfigError

# section -> key -> default; value types are fixed by the default's type
SCHEMA: dict[str, dict[str, Any]] = {
    "": {"seed": 0, "threads": 0},  # threads 0 = machine parallelism
    "paths": {"schedule": "", "weather": "", "trajectories": "", "zones": "", "out": "out"},
    "ingest": {"airport": "SYN", "airport_tz": "UTC", "delimiter": ","},
    "trajectory": {"max_ground_speed_mps": 150.0, "gap_threshold_s": 900.0},
    "featurize": {
        "gap_min": 240.0,
        "window_min": 60.0,
        "moving_threshold_mps": 2.0,
        "pca_components": 18,
        "weather_staleness_h": 6.0,
    },
    "model.linear": {"ridge_lambda": 1e-6},
    "model.svr_linear": {"epsilon": 1.0, "c": 1.0, "epochs": 200, "learning_rate": 0.5},
    "model.mlp": {"hidden": 32, "learning_rate": 0.01, "epochs": 500},
    "model.gbdt": {
        "n_trees": 200,
        "max_depth": 6,
        "learning_rate": 0.1,
        "min_leaf": 20,
        "n_bins": 64,
    },
    "evaluate": {"train_fraction": 0.8, "importance_repeats": 20, "importance_family": "gbdt"},
    "synth": {
        "n_days": 7,
        "flights_per_day": 200,
        "beta_atc": 1.5,
        "beta_wx": 2.0,
        "noise_sigma_min": 2.5,
        "base_delay_min": 5.0,
        "carryover_coef": 1.2,
        "carryover_buffer_min": 6.0,
        "start_date": "2016-07-01",
    },
}

ENV_PREFIX = "TARMAC_"


def _coerce(section: str, key: str, value: Any) -> Any:
    default = SCHEMA[section][key]
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("true", "false", "1", "0"):
            return value.lower() in ("true", "1")
    elif isinstance(default, int):
        if isinstance(value, bool):
            pass  # fall through to error
        elif isinstance(value, int):
            return value
        elif isinstance(value, str):
            try:
                return int(value)
            except ValueError:
                pass
    elif isinstance(default, float):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        if isinstance(value, str):
            try:
                return float(value)
            except ValueError:
                pass
    elif isinstance(default, str):
        if isinstance(value, str):
            return value
    raise ConfigError(f"config {section or 'top-level'}.{key}: cannot use value {value!r}")


class PipelineConfig:
    """All pipeline settings, keyed by (section, key) from SCHEMA."""

    def __init__(self, values: Optional[dict[str, dict[str, Any]]] = None):
        self.values = {s: dict(kv) for s, kv in SCHEMA.items()}
        if values:
            for section, kv in values.items():
                for key, value in kv.items():
                    self.set(section, key, value)

    def get(self, section: str, key: str) -> Any:
        try:
            return self.values[section][key]
        except KeyError:
            raise ConfigError(f"unknown config key {section}.{key}") from None

    def set(self, section: str, key: str, value: Any) -> None:
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown config key {section or '(top)'}.{key}")
        self.values[section][key] = _coerce(section, key, value)

    def copy(self) -> "PipelineConfig":
        out = PipelineConfig()
        out.values = copy.deepcopy(self.values)
        return out

    # -- TOML --

    @classmethod
    def from_toml(cls, text: str) -> "PipelineConfig":
        try:
            doc = tomli.loads(text)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"config file is not valid TOML: {exc}") from exc
        cfg = cls()

        def walk(prefix: str, node: Mapping[str, Any]):
            for key, value in node.items():
                if isinstance(value, Mapping):
                    walk(f"{prefix}.{key}" if prefix else key, value)
                else:
                    cfg.set(prefix, key, value)

        walk("", doc)
        return cfg

    @classmethod
    def load(cls, path: str) -> "PipelineConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_toml(fh.read())

    def to_toml(self) -> str:
        def fmt(value: Any) -> str:
            if isinstance(value, bool):
                return "true" if value else "false"
            if isinstance(value, (int, float)):
                return repr(value)
            return json.dumps(value)

        lines = []
        for key, value in self.values[""].items():
            lines.append(f"{key} = {fmt(value)}")
        for section in SCHEMA:
            if not section:
                continue
            lines.append("")
            lines.append(f"[{section}]")
            for key, value in self.values[section].items():
                lines.append(f"{key} = {fmt(value)}")
        return "\n".join(lines) + "\n"

    # -- overrides --

    def apply_env(self, environ: Mapping[str, str]) -> None:
        for section, kv in SCHEMA.items():
            for key in kv:
                parts = [p for p in section.split(".") if p] + [key]
                name = ENV_PREFIX + "_".join(p.upper() for p in parts)
                if name in environ:
                    self.set(section, key, environ[name])

    @property
    def seed(self) -> int:
        return self.get("", "seed")

    @property
    def threads(self) -> int:
        return self.get("", "threads")
