import logging
import logging.config
import logging.handlers
import os
from pathlib import Path

LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def log_directory() -> Path:
    """Directory holding rotating log files, ``$SALSA_LOG_DIR`` or ``logs/``."""
    return Path(os.getenv("SALSA_LOG_DIR", "logs")).expanduser()


def configure_logging(
    level: str = "INFO",
    log_file: str | None = None,
    console: bool = True,
    logger_name: str = "salsa",
) -> logging.Logger:
    """Configure logging for both CLI and library usage.

    Training loops, metric workers and commands all log through children of ``logger_name``,
    so a single call here routes every phase summary to the console and, optionally, to a rotating file.

    :param str level:
        Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)

        **Default**: ``"INFO"``

    :param str log_file:
        Optional file name inside :func:`log_directory`. If None, only console logging is used.

    :param bool console:
        Whether to enable console logging

        **Default**: ``True``

    :param str logger_name:
        Name of the logger to configure

        **Default**: ``"salsa"``

    :returns:
        The configured logger.

    :raises ValueError:
        If ``level`` is not a recognised logging level.

    **Example:**

    ```python
    logger = configure_logging(level="DEBUG", log_file="overfit.log")
    logger.info("ready")
    ```
    """
    level = level.upper()
    if level not in LEVELS:
        raise ValueError(f"Invalid logging level: {level}")

    config = {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "standard": {
                "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            },
        },
        "handlers": {},
        "loggers": {
            "": {
                "handlers": [],
                "level": "WARNING",
                "propagate": True,
            },
            logger_name: {
                "handlers": [],
                "level": level,
                "propagate": False,
            },
        },
    }

    if console:
        config["handlers"]["console"] = {
            "class": "logging.StreamHandler",
            "formatter": "standard",
            "level": level,
        }
        config["loggers"][logger_name]["handlers"].append("console")

    if log_file:
        log_dir = log_directory()
        log_dir.mkdir(parents=True, exist_ok=True)

        config["handlers"]["file"] = {
            "class": "logging.handlers.RotatingFileHandler",
            "formatter": "standard",
            "filename": str(log_dir / log_file),
            "mode": "a",
            "maxBytes": 10_485_760,  # 10MB
            "backupCount": 5,
            "level": level,
        }
        config["loggers"][logger_name]["handlers"].append("file")

    logging.config.dictConfig(config)
    logging.captureWarnings(True)

    return logging.getLogger(logger_name)


__all__ = ["configure_logging", "log_directory"]
