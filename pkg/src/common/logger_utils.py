# src/common/logger_utils.py
import logging
import os
import sys
from typing import Dict, Optional, Union

from colorlog import ColoredFormatter

LOG_FORMAT = "%(log_color)s%(bold)s%(levelname)s%(reset)s %(message)s"
LOG_COLORS = {
    'DEBUG': 'cyan',
    'INFO': 'green',
    'WARNING': 'yellow',
    'ERROR': 'red',
    'CRITICAL': 'bold_red,bg_white',
}

_LOGGERS: Dict[str, logging.Logger] = {}


def _resolve_level(level: Optional[Union[int, str]]) -> int:
    if level is None:
        level = os.getenv('POI_LOG_LEVEL', 'INFO')
    if isinstance(level, int):
        return level
    name = str(level).upper()
    return getattr(logging, name) if name in LOG_COLORS else logging.INFO


def setup_logger(name: str = "poi", level: Optional[Union[int, str]] = None) -> logging.Logger:
    """
    Configures and returns a logger with colored console output.

    Args:
        name (str): The name of the logger, usually the module's __name__.
        level (int | str | None): Minimum logging level. When omitted, the
            POI_LOG_LEVEL environment variable is used (default INFO).

    Returns:
        logging.Logger: A configured logger instance, registered so that
        set_log_level can reach it later.
    """
    logger = logging.getLogger(name)
    logger.setLevel(_resolve_level(level))

    # One handler per logger, even when modules are re-imported
    if not logger.handlers:
        handler = logging.StreamHandler(sys.stdout)
        handler.setFormatter(ColoredFormatter(LOG_FORMAT, log_colors=LOG_COLORS, style='%'))
        logger.addHandler(handler)
        logger.propagate = False

    _LOGGERS[name] = logger
    return logger


def set_log_level(level: Union[int, str]):
    """
    Applies a level to every logger created through setup_logger (used by -v).
    """
    resolved = _resolve_level(level)
    for logger in _LOGGERS.values():
        logger.setLevel(resolved)
