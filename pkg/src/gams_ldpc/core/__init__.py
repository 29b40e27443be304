from .context import Settings, get_settings
from .errors import (
    BaseGraphFormatError,
    CompressionError,
    ConfigurationError,
    DataFileNotFoundError,
    GamsLdpcError,
    InstrumentationError,
    PlaceholderShiftsError,
    SingularCoreError,
    SizeGuardError,
)
from .logging_handler import LdpcLogger, configure_logging

__all__ = [
    "BaseGraphFormatError",
    "CompressionError",
    "ConfigurationError",
    "DataFileNotFoundError",
    "GamsLdpcError",
    "InstrumentationError",
    "LdpcLogger",
    "PlaceholderShiftsError",
    "Settings",
    "SingularCoreError",
    "SizeGuardError",
    "configure_logging",
    "get_settings",
]
