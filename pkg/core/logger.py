import logging
import os
from typing import Optional

LOG_DIR = os.getenv("DCEA_LOG_DIR", os.path.join(os.path.dirname(os.path.dirname(__file__)), "logs"))
LOG_FORMAT = "%(asctime)s | %(levelname)s | %(name)s | %(module)s | %(message)s"

logger = logging.getLogger("dcea")


def configure_logging(level: Optional[str] = None, log_dir: Optional[str] = None) -> logging.Logger:
    """Attach console and file handlers to the "dcea" logger once.

    DCEA_LOG_LEVEL sets the level; an empty DCEA_LOG_DIR disables the file log.
    Child loggers ("dcea.core.sim_engine", ...) propagate here."""
    level = (level or os.getenv("DCEA_LOG_LEVEL", "INFO")).upper()
    log_dir = LOG_DIR if log_dir is None else log_dir
    logger.setLevel(level)
    if logger.handlers:
        return logger

    formatter = logging.Formatter(fmt=LOG_FORMAT, datefmt="%Y-%m-%d %H:%M:%S")
    console_handler = logging.StreamHandler()
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if log_dir:
        os.makedirs(log_dir, exist_ok=True)
        file_handler = logging.FileHandler(os.path.join(log_dir, "dcea.log"), encoding="utf-8")
        file_handler.setLevel(level)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)
    return logger
