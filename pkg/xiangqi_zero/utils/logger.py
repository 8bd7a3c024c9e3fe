"""
Logging configuration using Loguru.
All log output goes to stderr (stdout carries machine-readable results), optionally mirrored to
rotating files.
"""

import sys
from datetime import datetime
from pathlib import Path
from typing import Optional, TextIO

from loguru import logger

LOG_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} - {message}"
CONSOLE_FORMAT = "<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | {message}"


def setup_logger(
    log_level: str = "INFO",
    log_dir: Optional[Path] = None,
    rotation: str = "10 MB",
    retention: str = "7 days",
    stream: Optional[TextIO] = None,
) -> None:
    """
    Configure the application logger with console and optional file outputs.

    Args:
        log_level: Logging level (TRACE, DEBUG, INFO, WARNING, ERROR, CRITICAL).
        log_dir: Directory for log files. If None, only console logging is used.
        rotation: Log rotation size/time (e.g., "10 MB", "1 day").
        retention: How long to keep old log files.
        stream: Console stream, stderr by default.
    """
    logger.remove()

    console = stream or sys.stderr
    logger.add(
        console,
        level=log_level,
        format=CONSOLE_FORMAT,
        colorize=console.isatty() if hasattr(console, "isatty") else False,
    )

    if log_dir:
        log_dir = Path(log_dir)
        log_dir.mkdir(parents=True, exist_ok=True)
        date_str = datetime.now().strftime("%Y-%m-%d")

        logger.add(
            str(log_dir / f"xiangqi_zero_{date_str}.log"),
            level=log_level,
            format=LOG_FORMAT,
            rotation=rotation,
            retention=retention,
            compression="zip",
            encoding="utf-8",
            enqueue=True,
        )

        # Separate error log file
        logger.add(
            str(log_dir / f"xiangqi_zero_errors_{date_str}.log"),
            level="ERROR",
            format=LOG_FORMAT,
            rotation=rotation,
            retention=retention,
            compression="zip",
            encoding="utf-8",
            enqueue=True,
        )

    logger.debug(f"Logger initialized with level: {log_level}")


def get_logger(name: str = "xiangqi_zero"):
    """
    Get a logger instance with contextual information.

    Args:
        name: Logger name (usually module name).

    Returns:
        Logger instance with bound name context.
    """
    return logger.bind(name=name)
