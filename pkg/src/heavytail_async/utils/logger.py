import json
import logging
import time
import traceback
from functools import wraps
from pathlib import Path
from typing import Any, Iterable, Optional, Union

from tqdm import tqdm

from ..config import config
from . import sanitize


def pprint(o) -> str:
    """Render a log payload: dicts, lists and numpy values as indented JSON, the rest as text."""
    if isinstance(o, str):
        return o
    if isinstance(o, (dict, list, tuple)) or hasattr(o, "tolist"):
        try:
            return json.dumps(sanitize(o), indent=4)
        except (TypeError, ValueError):
            return str(o)
    return str(o)


class Logger:
    """
    Console and file logging shared by simulations, sweeps and the command line:
    colored one-line messages, errors copied to error.log, failed sweep points
    appended to sweep_fails.log, tqdm progress bars.
    """

    COLORS = {
        "error": "\033[91m",
        "warning": "\033[93m",
        "info": "\033[94m",
        "success": "\033[92m",
        "debug": "\033[95m",
        "bold": "\033[1m",
        "end": "\033[0m",
    }

    EMOJIS = {
        "error": "🚨",
        "warning": "⚠️",
        "info": "ℹ️",
        "success": "✅",
        "debug": "🔮",
    }

    def __init__(self, log_dir: Union[str, Path]):
        self.log_dir = Path(log_dir)
        self.log_dir.mkdir(parents=True, exist_ok=True)

        self.error_log = self.log_dir / "error.log"
        self.sweep_log = self.log_dir / "sweep_fails.log"

        self.logger = logging.getLogger("heavytail-async")
        self.logger.setLevel(logging.DEBUG if config.debug else logging.INFO)

        if config.is_logged:
            fh = logging.FileHandler(self.error_log)
            fh.setLevel(logging.ERROR)
            self.logger.addHandler(fh)

            ch = logging.StreamHandler()
            ch.setLevel(logging.INFO)
            self.logger.addHandler(ch)

    def format_message(self, *msg: Any, msg_type: str = "info") -> str:
        color = self.COLORS.get(msg_type, "")
        emoji = self.EMOJIS.get(msg_type, "")
        timestamp = time.strftime("%Y-%m-%d %H:%M:%S")
        body = "\n".join(f"{color}{self.COLORS['bold']}{pprint(m)}" for m in msg)
        return f"{emoji} {timestamp} {body}{self.COLORS['end']}"

    @staticmethod
    def format_exception(exception: Exception) -> str:
        """Class name, message and traceback of an exception."""
        return f"\n[{exception.__class__.__name__}] {exception}\n{traceback.format_exc()}"

    def error(self, *msg: Any, exception: Optional[Exception] = None):
        error_msg = self.format_message(*msg, msg_type="error")
        if exception:
            error_msg += self.format_exception(exception)
        self.logger.error(error_msg)

    def warning(self, *msg: Any):
        self.logger.warning(self.format_message(*msg, msg_type="warning"))

    def info(self, *msg: Any):
        self.logger.info(self.format_message(*msg, msg_type="info"))

    def debug(self, *msg: Any):
        """Only shown when config.debug is on."""
        if config.debug:
            self.logger.info(self.format_message(*msg, msg_type="debug"))

    def success(self, *msg: Any):
        self.logger.info(self.format_message(*msg, msg_type="success"))

    def progress(self, iterable: Iterable, desc: str = "", total: Optional[int] = None, unit: str = "run"):
        """
        Wrap an iterable in a tqdm bar

        Args:
            iterable: rounds of a simulation or points of a sweep
            desc: label printed before the bar
            total: number of items, when the iterable has no length
            unit: name of one item

        Returns:
            the bar, or the bare iterable when config.progress is off
        """
        if not config.progress:
            return iterable
        return tqdm(iterable, desc=desc, total=total, unit=unit, ncols=100, leave=False)

    def log_failed_point(self, point_dir: Union[str, Path], error: str):
        """Append one `<point dir> <error>` line to sweep_fails.log."""
        with open(self.sweep_log, "a") as f:
            f.write(f"{point_dir} {error}\n")


logger = Logger(config.log_dir)


def timer(func):
    """Log the wall time of `func` in debug mode."""

    @wraps(func)
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        result = func(*args, **kwargs)
        logger.debug(f"[{func.__name__}] {time.perf_counter() - start:.3f}s")
        return result

    return wrapper
