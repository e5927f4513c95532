"""
Logging utilities for Threshold Market.

Provides functions to log errors, warnings, progress and debug messages to the
log file of the current run. Nothing is written until ``setup_logging`` has
pointed the facade at an output directory.
"""

from __future__ import annotations

from datetime import datetime
from os import makedirs
from os.path import join
from typing import Optional

from .dataclass import LogSettings

_LEVELS = {"DEBUG": 10, "INFO": 20, "WARNING": 30, "ERROR": 40}

_settings: Optional[LogSettings] = None  # pylint: disable=invalid-name
_log_dir: Optional[str] = None  # pylint: disable=invalid-name


def setup_logging(settings: LogSettings, directory: str):
    """
    Activate file logging for a run.

    Args:
        settings (LogSettings): The ``[logging]`` section of the config.
        directory (str): Directory that receives the log file.

    Returns:
        None
    """
    global _settings, _log_dir  # pylint: disable=global-statement
    makedirs(directory, exist_ok=True)
    _settings = settings
    _log_dir = directory


def reset_logging():
    """Detach the facade from any log file."""
    global _settings, _log_dir  # pylint: disable=global-statement
    _settings = None
    _log_dir = None


def log_path() -> Optional[str]:
    """Return the active log file path, or None when logging is inactive."""
    if _settings is None or _log_dir is None:
        return None
    return join(_log_dir, _settings.log_file)


def _log_message(level: str, message: str):
    """
    Writes a log message with a specified level to the log file.

    Args:
        level (str): The log level (e.g., "ERROR", "INFO").
        message (str): The message to log.

    Returns:
        None
    """
    if _settings is None or not _settings.enable_logging:
        return

    threshold = _LEVELS.get(_settings.level.upper(), _LEVELS["INFO"])
    if _LEVELS[level] < threshold:
        return

    path = log_path()
    if path is None:
        return

    with open(path, "a", encoding="utf-8") as log_file_obj:
        log_file_obj.write(
            f"{datetime.now().strftime('%Y-%m-%d %H:%M:%S')} - [{level}] - {message}\n"
        )


def log_error(message: str):
    """Logs an error message to the log file."""
    _log_message("ERROR", message)


def log_warning(message: str):
    """Logs a warning message to the log file."""
    _log_message("WARNING", message)


def log_info(message: str):
    """Logs a progress message to the log file."""
    _log_message("INFO", message)


def log_debug(message: str):
    """Logs a debug message; written only when the level is DEBUG."""
    _log_message("DEBUG", message)


def check_clear_log():
    """
    Clears the log file if config value set to true by truncating it.

    Returns:
        None
    """
    path = log_path()
    if path is None or _settings is None:
        return
    if _settings.clear_log and _settings.enable_logging:
        with open(path, "w", encoding="utf-8") as log_file:
            log_file.truncate(0)
