import logging
import sys
from typing import Any, Dict

import orjson

from app.utils.config import settings


class StructuredFormatter(logging.Formatter):
    """
    A custom logging formatter that outputs logs as JSON,
    one object per line, for machine-readable verification runs.
    """
    def format(self, record: logging.LogRecord) -> str:
        log_record: Dict[str, Any] = {
            "timestamp": self.formatTime(record, self.datefmt),
            "level": record.levelname,
            "name": record.name,
            "message": record.getMessage(),
            "lineno": record.lineno,
            "thread": record.thread,
        }

        # Add any extra attributes passed to the log record
        if hasattr(record, "extra_data") and isinstance(record.extra_data, dict):
            log_record.update(record.extra_data)

        if record.exc_info:
            log_record["exc_info"] = self.formatException(record.exc_info)

        cleaned = {k: v for k, v in log_record.items() if v is not None and v != ""}
        return orjson.dumps(cleaned, default=str).decode()


def setup_logging(level: str | None = None) -> None:
    """
    Sets up the application-wide logging configuration.
    Uses a StructuredFormatter if LOG_FORMAT is 'json', otherwise a simple console formatter.
    Logs go to stderr so that stdout stays free for reports.
    """
    root_logger = logging.getLogger()
    root_logger.setLevel(level or settings.LOG_LEVEL)

    # Clear existing handlers to prevent duplicate logs if called multiple times
    for handler in list(root_logger.handlers):
        root_logger.removeHandler(handler)

    console_handler = logging.StreamHandler(sys.stderr)
    if settings.LOG_FORMAT == "json":
        formatter = StructuredFormatter(datefmt="%Y-%m-%dT%H:%M:%S%z")
    else:
        formatter = logging.Formatter(
            "%(levelname)s:     %(asctime)s - %(name)s - %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S",
        )
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    if not settings.DEBUG:
        logging.getLogger("joblib").setLevel(logging.WARNING)


setup_logging()
