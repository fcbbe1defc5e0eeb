"""
Configuration management for pflat.

Handles environment variables and the numeric settings used by solvers,
finite-difference checks and spectral diagnostics.
"""

import logging
import os
from pathlib import Path

import yaml
from dotenv import load_dotenv

# Load environment variables from .env file (looks in repo root)
load_dotenv(Path(__file__).parent.parent / ".env")

# Path to settings file (at repository root, parent of package)
CONFIG_PATH = Path(os.getenv("PFLAT_CONFIG") or Path(__file__).parent.parent / "config.yaml")

# Worker count for parallel assembly and trial fan-out
THREAD_COUNT_ENV = "PFLAT_THREADS"

# Log level override
LOG_LEVEL_ENV = "PFLAT_LOG_LEVEL"

# Built-in defaults, overridden key by key from config.yaml
DEFAULTS = {
    "tolerance": 1e-10,
    "max_iterations": 50,
    "flow_max_iterations": 20000,
    "flow_initial_step": 0.1,
    "flow_max_step": 1.0,
    "monotone_window": 20,
    "line_search_halvings": 40,
    "fd_step": 1e-5,
    "second_fd_step": 1e-3,
    "eig_dense_threshold": 2000,
    "log_level": "WARNING",
}

LOG_LEVELS = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}


def load_config() -> dict:
    """Load numeric settings from the YAML file merged over the defaults.

    Unknown keys are ignored. Values that cannot be converted to the type of
    the corresponding default fall back to the default.

    Returns:
        Dictionary with one entry per key in DEFAULTS
    """
    settings = dict(DEFAULTS)

    if not CONFIG_PATH.exists():
        return settings

    with open(CONFIG_PATH) as f:
        loaded = yaml.safe_load(f)

    for key, value in (loaded or {}).items():
        if key not in DEFAULTS:
            continue
        default = DEFAULTS[key]
        try:
            settings[key] = type(default)(value)
        except (TypeError, ValueError):
            settings[key] = default

    return settings


def get_setting(name: str):
    """Get a single setting by name.

    Args:
        name: Key from DEFAULTS

    Returns:
        The configured value

    Raises:
        KeyError: If the name is not a known setting
    """
    if name not in DEFAULTS:
        raise KeyError(f"Unknown setting: {name}")
    return load_config()[name]


def get_thread_count() -> int:
    """Get the worker count for parallel work from PFLAT_THREADS.

    Returns:
        A positive integer, 1 when unset or invalid
    """
    raw = os.getenv(THREAD_COUNT_ENV)
    if not raw:
        return 1
    try:
        count = int(raw)
    except ValueError:
        return 1
    return max(count, 1)


def get_log_level() -> str:
    """Get the log level from PFLAT_LOG_LEVEL or config.yaml.

    Returns:
        One of the standard logging level names
    """
    level = (os.getenv(LOG_LEVEL_ENV) or load_config()["log_level"]).upper()
    if level not in LOG_LEVELS:
        return "WARNING"
    return level


def configure_logging(verbosity: int = 0) -> None:
    """Configure root logging on stderr.

    Args:
        verbosity: Number of -v flags; each one lowers the level one step
    """
    level = getattr(logging, get_log_level())
    level = max(logging.DEBUG, level - 10 * verbosity)
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
