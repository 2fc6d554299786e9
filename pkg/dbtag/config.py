"""
Runtime configuration for dbtag.

Values come from the environment (optionally a .env file); CLI flags
override them. Unusable numeric values fall back to their defaults and are
recorded in SETTING_ERRORS so the CLI can refuse to start.
"""

import logging
import os
import sys
from typing import Callable, List, Optional

from dotenv import load_dotenv

from errors import ConfigError

load_dotenv()

SETTING_ERRORS: List[str] = []


def int_setting(name: str, default: int, accept: Callable[[int], bool], expected: str,
                errors: List[str] = SETTING_ERRORS) -> int:
    """Read an integer setting; invalid values are reported in `errors` and replaced by the default."""
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        value = int(raw)
    except ValueError:
        value = None
    if value is None or not accept(value):
        errors.append(f"{name}={raw!r} (expected {expected})")
        return default
    return value


LOG_LEVEL = os.getenv("DBTAG_LOG", "warn")
MAX_SPAN_TOKENS = int_setting("DBTAG_MAX_SPAN", 8, lambda value: value >= 1, "an integer >= 1")
# joblib convention: -1 means every available CPU
JOBS = int_setting("DBTAG_JOBS", -1, lambda value: value != 0, "a non-zero integer")
SQL_DIALECT = os.getenv("DBTAG_SQL_DIALECT", "sqlite")

_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "warning": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def log_level(name=None) -> int:
    """Map a DBTAG_LOG value to a logging level (unknown names fall back to WARNING)."""
    return _LEVELS.get((name or LOG_LEVEL).strip().lower(), logging.WARNING)


def configure_logging(name=None):
    """Configure root logging on stderr; stdout is reserved for data."""
    logging.basicConfig(
        level=log_level(name),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def validate_settings(errors: Optional[List[str]] = None):
    errors = SETTING_ERRORS if errors is None else errors
    if errors:
        raise ConfigError(f"invalid setting {'; '.join(errors)}")
