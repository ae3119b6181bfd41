"""Logging configuration for the refractive tomography toolkit.

Provides:
- Colored console output
- Rotating file handlers
- Structured logging via ``extra`` payloads
- Suppression of noisy third-party loggers
"""

import logging
import logging.handlers
import sys
from pathlib import Path
from typing import Optional

# ANSI color codes for terminal output
COLORS = {
    "DEBUG": "\033[36m",  # Cyan
    "INFO": "\033[32m",  # Green
    "WARNING": "\033[33m",  # Yellow
    "ERROR": "\033[31m",  # Red
    "CRITICAL": "\033[35m",  # Magenta
    "RESET": "\033[0m",
}

MAIN_LOG = "tomography.log"
ERROR_LOG = "errors.log"
MAX_LOG_BYTES = 10 * 1024 * 1024
LOG_BACKUPS = 5

# attributes every LogRecord has; anything else arrived through ``extra``
_STANDARD_RECORD_KEYS = set(
    logging.LogRecord("", 0, "", 0, "", (), None).__dict__.keys()
) | {"message", "asctime"}


class ColoredFormatter(logging.Formatter):
    """Console formatter that colors the level name and appends ``extra`` fields."""

    def format(self, record: logging.LogRecord) -> str:
        """Format log record with colors based on level.

        Args:
            record: Log record to format

        Returns:
            Formatted log string with ANSI color codes
        """
        # Add color to levelname
        levelname = record.levelname
        if levelname in COLORS:
            record.levelname = f"{COLORS[levelname]}{levelname}{COLORS['RESET']}"

        formatted = super().format(record)
        # Reset levelname for the file handlers
        record.levelname = levelname

        return formatted + _format_extra(record)


class StructuredFileFormatter(logging.Formatter):
    """Plain file formatter that keeps ``extra`` fields as ``key=value`` pairs."""

    def format(self, record: logging.LogRecord) -> str:
        return super().format(record) + _format_extra(record)


def _format_extra(record: logging.LogRecord) -> str:
    extra = {
        key: value
        for key, value in record.__dict__.items()
        if key not in _STANDARD_RECORD_KEYS and not key.startswith("_")
    }
    if not extra:
        return ""
    return " | " + " ".join(f"{key}={value}" for key, value in sorted(extra.items()))


def _rotating_handler(
    path: Path, level: int, formatter: logging.Formatter
) -> logging.handlers.RotatingFileHandler:
    handler = logging.handlers.RotatingFileHandler(
        path, maxBytes=MAX_LOG_BYTES, backupCount=LOG_BACKUPS, encoding="utf-8"
    )
    handler.setLevel(level)
    handler.setFormatter(formatter)
    return handler


def setup_logging(
    log_dir: Optional[Path] = None,
    log_level: str = "INFO",
    console_output: bool = True,
    file_output: bool = True,
) -> None:
    """Setup logging configuration for the application.

    Args:
        log_dir: Directory for log files. Created if it doesn't exist.
                If None, uses "logs" in the current directory.
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        console_output: Enable console logging
        file_output: Enable file logging

    Raises:
        ValueError: If log_level is invalid
        OSError: If log directory cannot be created

    Example:
        >>> from pathlib import Path
        >>> setup_logging(Path("output/logs"), log_level="DEBUG")
    """
    # Validate log level
    numeric_level = getattr(logging, log_level.upper(), None)
    if not isinstance(numeric_level, int):
        raise ValueError(f"Invalid log level: {log_level}")

    root_logger = logging.getLogger()
    root_logger.setLevel(numeric_level)
    # Remove existing handlers
    root_logger.handlers.clear()

    # Console handler with colored output
    if console_output:
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(numeric_level)
        console_handler.setFormatter(
            ColoredFormatter(fmt="%(levelname)s | %(name)s | %(message)s", datefmt="%H:%M:%S")
        )
        root_logger.addHandler(console_handler)

    if file_output:
        log_dir = Path(log_dir) if log_dir is not None else Path("logs")
        log_dir.mkdir(parents=True, exist_ok=True)

        file_format = StructuredFileFormatter(
            fmt="%(asctime)s | %(levelname)-8s | %(name)s | %(funcName)s:%(lineno)d | %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S",
        )

        # Main log gets every record, the error log only errors
        for name, level in ((MAIN_LOG, logging.DEBUG), (ERROR_LOG, logging.ERROR)):
            root_logger.addHandler(_rotating_handler(log_dir / name, level, file_format))

    _suppress_noisy_loggers()

    # Log initialization message
    logger = logging.getLogger(__name__)
    logger.info(
        "Logging initialized",
        extra={"level": log_level, "console": console_output, "file": file_output},
    )
    if file_output and log_dir:
        logger.info("Log directory configured", extra={"log_dir": str(log_dir.absolute())})


def _suppress_noisy_loggers() -> None:
    """Raise verbose third-party loggers to WARNING."""
    for logger_name in ("PIL", "matplotlib", "numba", "asyncio"):
        logging.getLogger(logger_name).setLevel(logging.WARNING)


def get_logger(name: str) -> logging.Logger:
    """Get a logger instance for a module.

    Args:
        name: Logger name (typically __name__ of the module)

    Returns:
        Configured logger instance
    """
    return logging.getLogger(name)
