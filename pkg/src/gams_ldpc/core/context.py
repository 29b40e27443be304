# context.py
import os
from functools import lru_cache
from pathlib import Path

from dotenv import load_dotenv

from .errors import ConfigurationError

DEFAULT_SEED = 2024
DEFAULT_FREQUENCY_HZ = 895e6

_PACKAGE_DATA = Path(__file__).resolve().parent.parent / "data"
_REPOSITORY_DATA = Path(__file__).resolve().parents[3] / "data"


class Settings:
    """Runtime settings resolved from the environment"""

    def __init__(self):
        load_dotenv()
        self.data_dir = self._get_data_dir()
        self.workers = self._get_workers()
        self.seed = self._get_seed()
        self.frequency_hz = self._get_frequency()
        self.allow_placeholder_shifts = self._get_allow_placeholder_shifts()
        self.log_level = os.environ.get("GAMS_LDPC_LOG_LEVEL", "INFO")

    def _get_data_dir(self) -> Path:
        """Get the base-graph directory, honouring the env override"""
        override = os.environ.get("GAMS_LDPC_DATA_DIR")
        if override:
            return Path(override)
        if _PACKAGE_DATA.is_dir():
            return _PACKAGE_DATA
        return _REPOSITORY_DATA

    def _get_workers(self) -> int:
        value = os.environ.get("GAMS_LDPC_WORKERS")
        if not value:
            return os.cpu_count() or 1
        try:
            workers = int(value)
        except ValueError:
            raise ConfigurationError(f"GAMS_LDPC_WORKERS must be an integer, got {value!r}")
        if workers < 1:
            raise ConfigurationError("GAMS_LDPC_WORKERS must be at least 1")
        return workers

    def _get_seed(self) -> int:
        value = os.environ.get("GAMS_LDPC_SEED")
        if not value:
            return DEFAULT_SEED
        try:
            return int(value)
        except ValueError:
            raise ConfigurationError(f"GAMS_LDPC_SEED must be an integer, got {value!r}")

    def _get_frequency(self) -> float:
        value = os.environ.get("GAMS_LDPC_FREQUENCY_HZ")
        if not value:
            return DEFAULT_FREQUENCY_HZ
        try:
            return float(value)
        except ValueError:
            raise ConfigurationError(
                f"GAMS_LDPC_FREQUENCY_HZ must be a number, got {value!r}"
            )

    def _get_allow_placeholder_shifts(self) -> bool:
        """Whether FER runs may use base graphs with placeholder shift coefficients"""
        value = os.environ.get("GAMS_LDPC_ALLOW_PLACEHOLDER_SHIFTS", "").strip().lower()
        if value in ("", "0", "false", "no"):
            return False
        if value in ("1", "true", "yes"):
            return True
        raise ConfigurationError(
            f"GAMS_LDPC_ALLOW_PLACEHOLDER_SHIFTS must be true or false, got {value!r}"
        )

    def base_graph_path(self, bg_id: int, data_dir: str | Path | None = None) -> Path:
        """Path of the text file holding base graph `bg_id`"""
        directory = Path(data_dir) if data_dir is not None else self.data_dir
        return directory / f"bg{int(bg_id)}.txt"


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Process-wide settings, read once."""
    return Settings()
