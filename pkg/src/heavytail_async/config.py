"""
Configuration module for heavytail_async package.

This module handles the process-wide settings of the package (output
locations, sweep parallelism, logging switches), providing both default
values and methods to override them. Experiment descriptions live in
:mod:`heavytail_async.experiment`.
"""

import copy
import os
from pathlib import Path
from typing import Optional, Union

TRUTHY = ("true", "1", "yes")


class Config:
    """Global configuration for the heavytail_async package."""

    def __init__(self, **kwargs):
        # current absolute dir where the user is executing python
        self._base_dir = Path(os.getcwd()).resolve()
        self._out_dir = self._base_dir / "runs"
        self._log_dir = self._base_dir / "log"

        # Execution settings
        self._parallel = 1
        self._history_factor = 4

        # Dev settings
        self._debug = False
        self._is_logged = True
        self._progress = True

        for key, value in kwargs.items():
            # override any config attribute
            setattr(self, f"_{key}", value)

        # Initialize from environment variables if present
        self._load_from_env()

        # Create directories if they don't exist
        self._create_dirs()

    def _load_from_env(self):
        """Load configuration from environment variables."""
        if path := os.getenv("HTA_BASE_DIR"):
            self._base_dir = Path(path)

        if dir_name := os.getenv("HTA_OUT_DIR"):
            self.out_dir = dir_name

        if dir_name := os.getenv("HTA_LOG_DIR"):
            self.log_dir = dir_name

        if parallel := os.getenv("HTA_PARALLEL"):
            self.parallel = int(parallel)

        if factor := os.getenv("HTA_HISTORY_FACTOR"):
            self.history_factor = int(factor)

        if debug := os.getenv("HTA_DEBUG"):
            self._debug = debug.lower() in TRUTHY

        if logged := os.getenv("HTA_IS_LOGGED"):
            self._is_logged = logged.lower() in TRUTHY

        if progress := os.getenv("HTA_PROGRESS"):
            self._progress = progress.lower() in TRUTHY

    def _create_dirs(self):
        """Create necessary directories if they don't exist."""
        self._out_dir.mkdir(parents=True, exist_ok=True)
        self._log_dir.mkdir(parents=True, exist_ok=True)

    def set_path(
        self, path: Optional[Union[str, Path]] = None, base_dir: Optional[Union[str, Path]] = None
    ) -> Path:
        parent_dir = Path(base_dir).resolve() if base_dir else self.base_dir
        if not path:
            return parent_dir
        if not isinstance(path, (str, Path)):
            raise TypeError("path must be Path or string")
        path = Path(path)
        child_dir = path if path.is_absolute() else parent_dir / path
        child_dir.mkdir(parents=True, exist_ok=True)
        return child_dir

    @property
    def base_dir(self) -> Path:
        """Base directory for logs and run artifacts"""
        return self._base_dir.resolve()

    @base_dir.setter
    def base_dir(self, path):
        # if path is absolute, base_dir will not be taken into account
        self._base_dir = self.set_path(path, base_dir=Path(os.getcwd()).resolve())

    @property
    def out_dir(self) -> Path:
        """Default root under which run and sweep artifacts are written."""
        return self._out_dir

    @out_dir.setter
    def out_dir(self, path):
        self._out_dir = self.set_path(path)

    @property
    def log_dir(self) -> Path:
        """Directory where logs will be saved."""
        return self._log_dir

    @log_dir.setter
    def log_dir(self, path: Path):
        self._log_dir = self.set_path(path)

    @property
    def parallel(self) -> int:
        """Number of sweep points executed at the same time."""
        return self._parallel

    @parallel.setter
    def parallel(self, value: int):
        if not isinstance(value, int) or isinstance(value, bool):
            raise TypeError("parallel must be an integer")
        if value < 1:
            raise ValueError("parallel must be at least 1")
        self._parallel = value

    @property
    def history_factor(self) -> int:
        """Multiplier applied to the worst-case runtime ratio when sizing the model history."""
        return self._history_factor

    @history_factor.setter
    def history_factor(self, value: int):
        if not isinstance(value, int) or isinstance(value, bool):
            raise TypeError("history_factor must be an integer")
        if value < 1:
            raise ValueError("history_factor must be at least 1")
        self._history_factor = value

    @property
    def debug(self) -> bool:
        """Enable debug mode."""
        return self._debug

    @debug.setter
    def debug(self, value: bool):
        if not isinstance(value, bool):
            raise TypeError("Debug must be a boolean")
        self._debug = value

    @property
    def is_logged(self) -> bool:
        """Save logs to file."""
        return self._is_logged

    @is_logged.setter
    def is_logged(self, value: bool):
        if not isinstance(value, bool):
            raise TypeError("is_logged must be a boolean")
        self._is_logged = value

    @property
    def progress(self) -> bool:
        """Display progress bars."""
        return self._progress

    @progress.setter
    def progress(self, value: bool):
        if not isinstance(value, bool):
            raise TypeError("progress must be a boolean")
        self._progress = value

    def copy(self):
        return copy.copy(self)


# Global configuration instance
config = Config()
