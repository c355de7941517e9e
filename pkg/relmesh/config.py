"""Flat ``key = value`` run configuration files.

Example file::

    # vortex accuracy run
    case = vortex
    cells = 80
    flux = es2
    monitor.alpha = 20
    output.times = 0, 2, 4
"""

import logging
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple, Union

from .exceptions import ConfigError
from .models import RunConfig

logger = logging.getLogger(__name__)

_TRUE = {"on", "true", "yes", "1"}
_FALSE = {"off", "false", "no", "0"}


def parse_bool(text: str) -> bool:
    value = text.strip().lower()
    if value in _TRUE:
        return True
    if value in _FALSE:
        return False
    raise ValueError(f"expected on/off, got '{text}'")


def parse_int_list(text: str) -> Tuple[int, ...]:
    return tuple(int(part) for part in text.split(",") if part.strip())


def parse_float_list(text: str) -> Tuple[float, ...]:
    return tuple(float(part) for part in text.split(",") if part.strip())


def _text(value: str) -> str:
    return value.strip()


# config key -> (RunConfig field, parser)
CONFIG_KEYS: Dict[str, Tuple[str, Callable[[str], Any]]] = {
    "case": ("case", _text),
    "cells": ("cells", parse_int_list),
    "cfl": ("cfl", float),
    "flux": ("flux", lambda v: v.strip().lower()),
    "vcl": ("vcl", lambda v: v.strip().lower()),
    "rk": ("rk", lambda v: v.strip().lower()),
    "adapt.enabled": ("adapt_enabled", parse_bool),
    "adapt.mu": ("adapt_mu", int),
    "adapt.initial_sweeps": ("adapt_initial_sweeps", int),
    "monitor.alpha": ("monitor_alpha", float),
    "monitor.sigma": ("monitor_sigma", _text),
    "monitor.filter_passes": ("monitor_filter_passes", int),
    "t_final": ("t_final", float),
    "output.dir": ("output_dir", _text),
    "output.every": ("output_every", int),
    "output.times": ("output_times", parse_float_list),
    "output.vtk": ("output_vtk", parse_bool),
    "max_steps": ("max_steps", int),
}

_FIELD_TO_KEY = {field: key for key, (field, _) in CONFIG_KEYS.items()}


def parse_config_text(text: str) -> Tuple[Dict[str, Any], Dict[str, int]]:
    """Parse config text into RunConfig field values.

    Args:
        text: File contents

    Returns:
        Tuple (field values, config key -> 1-based line number)

    Raises:
        ConfigError: On malformed lines, unknown or repeated keys, bad values
    """
    values: Dict[str, Any] = {}
    lines: Dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got '{raw.strip()}'", line=number)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown key '{key}'", line=number, key=key)
        if key in lines:
            raise ConfigError(f"duplicate key '{key}' (first on line {lines[key]})", line=number, key=key)
        field, parser = CONFIG_KEYS[key]
        try:
            values[field] = parser(value)
        except ValueError as e:
            raise ConfigError(f"bad value for '{key}': {str(e)}", line=number, key=key) from e
        lines[key] = number
    return values, lines


def build_config(
    values: Dict[str, Any],
    lines: Optional[Dict[str, int]] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> RunConfig:
    """Construct a RunConfig, reporting the file line of an invalid key.

    Args:
        values: Field values from :func:`parse_config_text`
        lines: Key line numbers from :func:`parse_config_text`
        overrides: Field values taking precedence (``None`` entries ignored)
    """
    lines = lines or {}
    merged = dict(values)
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    if "case" not in merged:
        raise ConfigError("case is required", key="case")
    try:
        return RunConfig(**merged)
    except ConfigError as e:
        overridden = overrides is not None and overrides.get(_config_field(e.key)) is not None
        if e.key in lines and not overridden:
            raise ConfigError(e.reason, line=lines[e.key], key=e.key) from e
        raise


def _config_field(key: Optional[str]) -> Optional[str]:
    if key is None:
        return None
    return CONFIG_KEYS[key][0] if key in CONFIG_KEYS else key


def load_config(
    path: Union[str, Path], overrides: Optional[Dict[str, Any]] = None
) -> RunConfig:
    """Read a config file and apply overrides.

    Raises:
        ConfigError: If the file is invalid
        OSError: If the file cannot be read
    """
    path = Path(path)
    logger.debug("Loading config %s", path)
    values, lines = parse_config_text(path.read_text())
    return build_config(values, lines, overrides)


def dump_config(config: RunConfig) -> str:
    """Render a RunConfig back to the file format (unset keys omitted)."""
    out = []
    for field, value in config.to_dict().items():
        if value is None:
            continue
        key = _FIELD_TO_KEY[field]
        if isinstance(value, bool):
            text = "on" if value else "off"
        elif isinstance(value, tuple):
            text = ", ".join(repr(v) for v in value)
        else:
            text = str(value)
        out.append(f"{key} = {text}")
    return "\n".join(out) + "\n"
