import logging
import os
import sys

from dotenv import load_dotenv

logger = logging.getLogger("ansatz-forge-config")

load_dotenv()

DEFAULT_THREADS = 1
DEFAULT_LOG_LEVEL = "INFO"
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def get_max_workers() -> int:
    raw = os.getenv("ANSATZ_FORGE_THREADS")
    if raw is None or not raw.strip():
        return DEFAULT_THREADS
    try:
        value = int(raw)
    except ValueError:
        logger.warning("Ignoring non-integer ANSATZ_FORGE_THREADS=%r; using %d", raw, DEFAULT_THREADS)
        return DEFAULT_THREADS
    if value < 1:
        logger.warning("Ignoring ANSATZ_FORGE_THREADS=%d (must be >= 1); using %d", value, DEFAULT_THREADS)
        return DEFAULT_THREADS
    return value


def get_log_level() -> int:
    name = os.getenv("ANSATZ_FORGE_LOG_LEVEL", DEFAULT_LOG_LEVEL).strip().upper()
    level = logging.getLevelName(name)
    if not isinstance(level, int):
        return logging.INFO
    return level


def configure_logging() -> None:
    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    log_file = os.getenv("ANSATZ_FORGE_LOG_FILE")
    file_error: OSError | None = None
    if log_file:
        try:
            handlers.append(logging.FileHandler(log_file))
        except OSError as exc:
            file_error = exc

    logging.basicConfig(
        level=get_log_level(),
        handlers=handlers,
        format=LOG_FORMAT,
        datefmt="%Y-%m-%d %H:%M:%S",
        force=True,
    )
    if file_error is not None:
        logger.warning("File logging is unavailable (%s); continuing with stderr logging only.", file_error)
