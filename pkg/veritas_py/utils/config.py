"""
JSON configuration and environment helpers.
"""

import json
import os
from pathlib import Path
from typing import Any, Optional, Union

from .exceptions import ConfigError
from .logger import get_logger

logger = get_logger(__name__)


def load_json(path: Union[str, Path]) -> Any:
    """
    Load a JSON document.

    Args:
        path: File to read

    Returns:
        Parsed JSON value
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"No such file: {path}")
    try:
        with open(path, "r") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        logger.error(f"Failed to parse {path}: {e}")
        raise ConfigError(f"Invalid JSON in {path}: {e}") from e


def save_json(data: Any, path: Union[str, Path]):
    """Write a JSON document with stable key order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")


def env_int(name: str, default: Optional[int] = None) -> Optional[int]:
    """Read an integer environment variable."""
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError as e:
        raise ConfigError(f"{name} must be an integer, got {raw!r}") from e


def require_keys(data: dict, keys, where: str):
    """Raise ConfigError when any key is missing from a config mapping."""
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a JSON object")
    missing = [k for k in keys if k not in data]
    if missing:
        raise ConfigError(f"{where}: missing keys {missing}")
