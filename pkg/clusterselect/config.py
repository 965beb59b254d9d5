import os
import logging
from typing import Optional

import psutil
from pythonjsonlogger import jsonlogger


def get_env(name: str, default: str) -> str:
    v = os.getenv(name)
    return v if v is not None else default


def _default_threads() -> int:
    return psutil.cpu_count(logical=True) or 1


THREADS = int(get_env("CLUSTERSELECT_THREADS", str(_default_threads())))
LOG_LEVEL = get_env("CLUSTERSELECT_LOG_LEVEL", "INFO").upper()
LOG_FORMAT = get_env("CLUSTERSELECT_LOG_FORMAT", "text").lower()
DEFAULT_LINKAGE = get_env("CLUSTERSELECT_LINKAGE", "average")

# Lloyd / mean-shift iteration caps when a config does not set max_iter
DEFAULT_MAX_ITER = int(get_env("CLUSTERSELECT_MAX_ITER", "300"))

LOG_FORMAT_STRING = "%(asctime)s %(levelname)s %(message)s"


def resolve_threads(threads: Optional[int]) -> int:
    """Explicit value wins over CLUSTERSELECT_THREADS; never below 1."""
    if threads is None:
        threads = THREADS
    return max(int(threads), 1)


def configure_logging(level: Optional[str] = None, json_format: Optional[bool] = None) -> None:
    level = (level or LOG_LEVEL).upper()
    if json_format is None:
        json_format = LOG_FORMAT == "json"

    handler = logging.StreamHandler()
    if json_format:
        handler.setFormatter(jsonlogger.JsonFormatter(LOG_FORMAT_STRING))
    else:
        handler.setFormatter(logging.Formatter(LOG_FORMAT_STRING))

    root = logging.getLogger()
    for h in list(root.handlers):
        root.removeHandler(h)
    root.addHandler(handler)
    root.setLevel(getattr(logging, level, logging.INFO))
