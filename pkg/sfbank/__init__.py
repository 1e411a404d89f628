import logging
import sys

__version__ = "0.1.0"

_LOG_FORMAT = '[%(asctime)s] %(levelname)s in %(module)s: %(message)s'


def configure_logging(level: str | int = logging.INFO) -> logging.Logger:
    """Configure logging for the sfbank package.

    Human-readable logs go to standard error; standard output is kept free for
    the JSON the CLI prints. Calling this again updates the level and points the
    handler at the current ``sys.stderr``.

    Args:
        level: logging level name or number

    Returns:
        logging.Logger: the package logger
    """
    logger = logging.getLogger('sfbank')
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.INFO

    if not logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(_LOG_FORMAT))
        logger.addHandler(handler)

    for handler in logger.handlers:
        if isinstance(handler, logging.StreamHandler):
            handler.setStream(sys.stderr)
        handler.setLevel(level)
    logger.setLevel(level)
    return logger
