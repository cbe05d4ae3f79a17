"""
Utility module: logging, constants, exceptions and shared helpers.
"""

from .logger import get_logger, setup_logging, enable_debug_logging
from .exceptions import VeritasError, ValidationError, NumericalError

__all__ = [
    "get_logger",
    "setup_logging",
    "enable_debug_logging",
    "VeritasError",
    "ValidationError",
    "NumericalError",
]
