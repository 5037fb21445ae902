"""Config loader: YAML or flat ``key = value`` files, env substitution, CLI overrides."""

from __future__ import annotations

import logging
import os
import re
from pathlib import Path
from typing import Any

import yaml
from pydantic import ValidationError

from fastlloyd.config.models import FastLloydConfig, ProtocolParams
from fastlloyd.config.settings import get_settings
from fastlloyd.core.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

_ENV_PATTERN = re.compile(r"\$\{(\w+)(?::([^}]*))?\}")

CONFIG_DIR = Path(__file__).resolve().parent.parent.parent / "config"
DEFAULT_CONFIG = CONFIG_DIR / "fastlloyd.yaml"

_PARAM_FIELDS = frozenset(ProtocolParams.model_fields)


def _substitute_env_vars(value: str) -> str:
    """Replace ${VAR} or ${VAR:default} with environment variable values."""

    def replacer(match: re.Match) -> str:
        var_name = match.group(1)
        default = match.group(2)
        return os.environ.get(var_name, default if default is not None else match.group(0))

    return _ENV_PATTERN.sub(replacer, value)


def _walk_and_substitute(obj):
    """Recursively substitute env vars in all string values."""
    if isinstance(obj, str):
        return _substitute_env_vars(obj)
    if isinstance(obj, dict):
        return {k: _walk_and_substitute(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_walk_and_substitute(item) for item in obj]
    return obj


def _scalar(text: str) -> Any:
    """Type a flat-file value the way YAML would (ints, floats, bools, lists, null)."""
    value = yaml.safe_load(_substitute_env_vars(text))
    # YAML reads "1e-5" as a string; accept plain float syntax too.
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return value
    return value


def _assign(target: dict, dotted: str, value: Any) -> None:
    keys = dotted.split(".")
    if len(keys) == 1 and keys[0] in _PARAM_FIELDS:
        keys = ["params", keys[0]]
    node = target
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ConfigurationError(f"config key {dotted!r} collides with a scalar value")
    node[keys[-1]] = value


def parse_flat(text: str) -> dict:
    """Parse the flat ``key = value`` format; bare keys name ProtocolParams fields."""
    merged: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if not key:
            raise ConfigurationError(f"line {lineno}: empty key")
        _assign(merged, key, _scalar(value))
    return merged


def load_yaml(path: Path) -> dict:
    """Load a YAML file with env var substitution."""
    with open(path) as f:
        raw = yaml.safe_load(f) or {}
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: top level must be a mapping")
    return _walk_and_substitute(raw)


def load_file(path: Path) -> dict:
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    if path.suffix in (".yaml", ".yml"):
        return load_yaml(path)
    return parse_flat(path.read_text())


def _deep_merge(base: dict, overrides: dict) -> dict:
    out = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def build_config(data: dict) -> FastLloydConfig:
    try:
        return FastLloydConfig(**data)
    except ValidationError as e:
        raise ConfigurationError(f"invalid configuration: {e}") from e


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> FastLloydConfig:
    """Load defaults, then ``path`` (or $FASTLLOYD_CONFIG), then overrides, then $FASTLLOYD_SEED."""
    settings = get_settings()
    merged: dict = {}

    if DEFAULT_CONFIG.exists():
        merged = load_yaml(DEFAULT_CONFIG)

    chosen = path or settings.config
    if chosen:
        merged = _deep_merge(merged, load_file(Path(chosen)))

    if overrides:
        merged = _deep_merge(merged, overrides)

    if settings.seed is not None:
        logger.info("Seed overridden from FASTLLOYD_SEED=%d", settings.seed)
        merged = _deep_merge(merged, {"params": {"seed": settings.seed}})

    return build_config(merged)
