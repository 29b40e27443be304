"""Exception hierarchy shared by the library, the CLI and the MCP services."""


class GamsLdpcError(Exception):
    """Base class for all errors raised by gams_ldpc."""


class BaseGraphFormatError(GamsLdpcError):
    """A base-graph file is malformed or inconsistent with its declared graph."""


class DataFileNotFoundError(GamsLdpcError):
    """A required data file is missing."""

    def __init__(self, path):
        self.path = path
        super().__init__(f"base-graph data file not found: expected {path}")


class ConfigurationError(GamsLdpcError):
    """Invalid code, decoder, channel, schedule or command parameters."""


class SingularCoreError(GamsLdpcError):
    """The encoder's core parity system is not invertible over GF(2)."""


class SizeGuardError(GamsLdpcError):
    """A dense expansion was requested for a code that is too large."""


class CompressionError(GamsLdpcError):
    """An R-message row cannot be represented in compressed form."""


class InstrumentationError(GamsLdpcError):
    """Instrumented operation counts are unavailable for the request."""


class PlaceholderShiftsError(GamsLdpcError):
    """A FER run was asked to use a base graph whose shift coefficients are placeholders."""
