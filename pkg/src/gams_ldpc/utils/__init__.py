"""Common utility functions."""

from .helpers import error_response, success_response

__all__ = ["error_response", "success_response"]
