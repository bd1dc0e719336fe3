"""Flat key-value experiment configs with dotted task sections.

Grammar, one assignment per line:

    # full-line comments and blank lines are ignored
    task = capacity
    seed = 7
    capacity.group = R2
    capacity.p = 2.0

Keys are lowercase identifiers, optionally one dotted section level
(``section.key``). Values are raw strings; each task parses its own section.
parse/serialize round-trips exactly (serialize emits sorted keys), and
environment variables with the CARNOTCAP_ prefix override file values while
command-line flags override both.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "parse_config",
    "serialize_config",
    "load_config",
    "env_overrides",
    "merge_config",
    "TASKS",
]

TASKS = ("capacity", "distort", "cov", "push", "verify", "zoo", "liouville")

_TOP_KEYS = ("task", "seed", "out", "resolution", "slack", "plots")

_KEY_RE = re.compile(r"[a-z][a-z0-9_]*(\.[a-z][a-z0-9_]*)?\Z")

ENV_PREFIX = "CARNOTCAP_"


class ConfigError(ValueError):
    """Malformed config text or invalid experiment parameters."""


def parse_config(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key = key.strip()
        value = value.strip()
        if not _KEY_RE.match(key):
            raise ConfigError(f"line {lineno}: bad key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def serialize_config(mapping: dict[str, str]) -> str:
    lines = [f"{k} = {mapping[k]}" for k in sorted(mapping)]
    return "\n".join(lines) + "\n" if lines else ""


def load_config(path) -> dict[str, str]:
    try:
        with open(path) as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def env_overrides(environ) -> dict[str, str]:
    """CARNOTCAP_TASK -> task, CARNOTCAP_CAPACITY_P -> capacity.p,
    CARNOTCAP_LIOUVILLE_CORE_R -> liouville.core_r (first '_' splits the
    section; top-level keys contain no underscore)."""
    out = {}
    for name, value in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        tail = name[len(ENV_PREFIX):].lower()
        if not tail:
            continue
        key = tail.replace("_", ".", 1) if "_" in tail else tail
        if not _KEY_RE.match(key):
            raise ConfigError(f"environment variable {name} maps to bad key {key!r}")
        out[key] = value
    return out


def merge_config(*layers: dict[str, str]) -> dict[str, str]:
    """Later layers win (file, then environment, then flags)."""
    merged: dict[str, str] = {}
    for layer in layers:
        merged.update(layer)
    return merged


def _to_int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected integer, got {value!r}") from exc


def _to_float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected number, got {value!r}") from exc


def _to_bool(key: str, value: str) -> bool:
    low = value.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected boolean, got {value!r}")


@dataclass
class ExperimentConfig:
    """Validated top-level settings plus the raw task section."""

    task: str
    seed: int = 0
    out: str = "carnotcap_report.csv"
    resolution: int = 64
    slack: float = 0.1
    plots: bool = False
    params: dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_mapping(cls, mapping: dict[str, str]) -> "ExperimentConfig":
        task = mapping.get("task", "")
        if task not in TASKS:
            raise ConfigError(
                f"task must be one of {', '.join(TASKS)}; got {task!r}"
            )
        for key in mapping:
            # flags bypass parse_config, so enforce the grammar here too
            if not _KEY_RE.match(key):
                raise ConfigError(f"bad key {key!r}")
            if "." not in key and key not in _TOP_KEYS:
                raise ConfigError(f"unknown top-level key {key!r}")
        kwargs = {"task": task}
        if "seed" in mapping:
            kwargs["seed"] = _to_int("seed", mapping["seed"])
        if "out" in mapping:
            kwargs["out"] = mapping["out"]
        if "resolution" in mapping:
            res = _to_int("resolution", mapping["resolution"])
            if res < 2:
                raise ConfigError("resolution must be >= 2")
            kwargs["resolution"] = res
        if "slack" in mapping:
            slack = _to_float("slack", mapping["slack"])
            if slack < 0:
                raise ConfigError("slack must be >= 0")
            kwargs["slack"] = slack
        if "plots" in mapping:
            kwargs["plots"] = _to_bool("plots", mapping["plots"])
        params = {}
        for key, value in mapping.items():
            if "." in key:
                section, _, sub = key.partition(".")
                if section == task:
                    params[sub] = value
                # other sections are allowed and ignored for this run
        kwargs["params"] = params
        return cls(**kwargs)

    def param_str(self, key: str, default: str) -> str:
        return self.params.get(key, default)

    def param_float(self, key: str, default: float) -> float:
        if key in self.params:
            return _to_float(f"{self.task}.{key}", self.params[key])
        return default

    def param_int(self, key: str, default: int) -> int:
        if key in self.params:
            return _to_int(f"{self.task}.{key}", self.params[key])
        return default

    def param_floats(self, key: str, default: tuple[float, ...]) -> tuple[float, ...]:
        """':'-separated float list."""
        if key not in self.params:
            return default
        raw = self.params[key]
        try:
            vals = tuple(float(v) for v in raw.split(":") if v.strip())
        except ValueError as exc:
            raise ConfigError(f"{self.task}.{key}: bad float list {raw!r}") from exc
        if not vals:
            raise ConfigError(f"{self.task}.{key}: empty list")
        return vals
