import logging


class LdpcLogger:
    """Named logger for decoder runs and reports"""

    def __init__(self, name):
        self.logger = logging.getLogger(f"ldpc.{name}")

    def info(self, message):
        self.logger.info(message)

    def warning(self, message):
        self.logger.warning(message)

    def error(self, message):
        self.logger.error(message)

    def critical(self, message):
        self.logger.critical(message)

    def debug(self, message):
        self.logger.debug(message)

    def audit_log(self, action, resource, details=None):
        """Record a run or report request"""
        if details:
            summary = ", ".join(f"{key}={value}" for key, value in details.items())
            self.logger.info(f"AUDIT: {action} on {resource} ({summary})")
        else:
            self.logger.info(f"AUDIT: {action} on {resource}")


def configure_logging(level: str | None = None) -> None:
    """Configure root logging once for an entry point."""
    from .context import get_settings

    level_name = (level or get_settings().log_level).upper()
    logging.basicConfig(
        level=getattr(logging, level_name, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
