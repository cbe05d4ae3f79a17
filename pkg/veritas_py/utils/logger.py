"""
Logging setup for veritas_py.

All handlers write to stderr (and optionally a file) so that stdout stays
reserved for CSV/JSON results.
"""

import logging
import os
import sys
from typing import Optional

from .constants import ENV_LOG_FILE, ENV_LOG_LEVEL

DEFAULT_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

_ROOT_NAME = "veritas_py"


def setup_logging(
    level: Optional[str] = None,
    log_file: Optional[str] = None,
    format_string: Optional[str] = None,
) -> logging.Logger:
    """
    Configure the package logger.

    Args:
        level: Log level name; falls back to VERITAS_LOG_LEVEL, then INFO
        log_file: Optional file to mirror the log into; falls back to VERITAS_LOG_FILE
        format_string: Custom logging format

    Returns:
        The configured package root logger
    """
    level = (level or os.environ.get(ENV_LOG_LEVEL) or "INFO").upper()
    log_file = log_file or os.environ.get(ENV_LOG_FILE)
    formatter = logging.Formatter(format_string or DEFAULT_FORMAT)

    root = logging.getLogger(_ROOT_NAME)
    root.setLevel(getattr(logging, level, logging.INFO))

    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()

    stream_handler = logging.StreamHandler(sys.stderr)
    stream_handler.setFormatter(formatter)
    root.addHandler(stream_handler)

    if log_file:
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(formatter)
        root.addHandler(file_handler)

    root.propagate = False
    return root


def get_logger(name: str) -> logging.Logger:
    """Get a logger under the package namespace."""
    if not name.startswith(_ROOT_NAME):
        name = f"{_ROOT_NAME}.{name}"
    return logging.getLogger(name)


def enable_debug_logging():
    """Switch the package logger to DEBUG."""
    setup_logging(level="DEBUG")
