"""Run logging: warnings to stderr, everything at the chosen level to a per-run file."""

import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional

from .console import format_float
from .exceptions import ConfigError

LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def resolve_level(level: str) -> int:
    """Map a level name to its logging constant; unknown names are config errors."""
    name = str(level).upper()
    if name not in LEVELS:
        raise ConfigError(f"log level must be one of {', '.join(LEVELS)}, got '{level}'")
    return getattr(logging, name)


def _render(value: Any) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return format_float(value)
    return str(value)


class FileLogger:
    """One run's log.

    The console handler only passes WARNING and above since command output goes
    through rich. The file receives every record at `level` or higher.
    """

    LOG_FORMAT = "%(asctime)s | %(levelname)-8s | %(message)s"
    DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

    def __init__(
        self,
        log_file: Optional[str] = None,
        level: str = "INFO",
        log_to_file: bool = True,
        run_name: str = "zdquant",
    ):
        self.log_file = log_file
        self.level = resolve_level(level)
        self.log_to_file = log_to_file
        self.run_name = run_name
        # per-instance name: loggers created in tests never share handlers
        self.logger = logging.getLogger(f"zdquant.run.{id(self)}")
        self.logger.propagate = False
        self._file_handler: Optional[logging.FileHandler] = None

    @property
    def active(self) -> bool:
        return bool(self.logger.handlers)

    def setup(self, output_dir: str = "output") -> Optional[str]:
        """Attach handlers; returns the log file path, or None when file logging is off."""
        if self.active:
            return self.log_file

        formatter = logging.Formatter(self.LOG_FORMAT, self.DATE_FORMAT)
        self.logger.setLevel(self.level)

        stderr = logging.StreamHandler(sys.stderr)
        stderr.setLevel(logging.WARNING)
        stderr.setFormatter(formatter)
        self.logger.addHandler(stderr)

        if self.log_to_file:
            Path(output_dir).mkdir(parents=True, exist_ok=True)
            if not self.log_file:
                stamp = datetime.now().strftime("%Y%m%d_%H%M%S")
                self.log_file = str(Path(output_dir) / f"{self.run_name}_{stamp}.log")
            self._file_handler = logging.FileHandler(self.log_file, encoding="utf-8")
            self._file_handler.setFormatter(formatter)
            self.logger.addHandler(self._file_handler)
        return self.log_file

    def close(self):
        """Detach and close every handler; the log file can then be removed."""
        for handler in self.logger.handlers[:]:
            handler.close()
            self.logger.removeHandler(handler)
        self._file_handler = None

    def log_run(self, command: str, **params: Any):
        """One INFO line naming the command and its resolved parameters."""
        fields = " ".join(f"{key}={_render(value)}" for key, value in params.items())
        self.logger.info(f"{command}: {fields}" if fields else command)

    def log_summary(self, stats: Dict[str, Any]):
        """Append `key: value` lines to the file only, floats at 12 significant digits."""
        if self._file_handler is None:
            return
        stream = self._file_handler.stream
        for key, value in stats.items():
            stream.write(f"{key}: {_render(value)}\n")
        self._file_handler.flush()

    def debug(self, msg: str):
        self.logger.debug(msg)

    def info(self, msg: str):
        self.logger.info(msg)

    def warning(self, msg: str):
        self.logger.warning(msg)

    def error(self, msg: str):
        self.logger.error(msg)


_logger: Optional[FileLogger] = None


def get_logger() -> FileLogger:
    """The current run's logger; a console-only one until setup_logger runs."""
    global _logger
    if _logger is None:
        _logger = FileLogger(log_to_file=False)
    return _logger


def setup_logger(
    log_file: Optional[str] = None,
    level: str = "INFO",
    log_to_file: bool = True,
    output_dir: str = "output",
    run_name: str = "zdquant",
) -> FileLogger:
    """Replace the global logger with a fresh one writing under output_dir."""
    global _logger
    logger = FileLogger(log_file, level, log_to_file, run_name)
    if _logger is not None:
        _logger.close()
    _logger = logger
    _logger.setup(output_dir)
    return _logger
