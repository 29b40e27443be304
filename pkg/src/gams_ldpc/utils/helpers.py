"""Common utility functions."""

import json


def success_response(**payload) -> str:
    """JSON envelope for a successful tool call."""
    return json.dumps({"status": "success", **payload}, indent=2, default=str)


def error_response(error: Exception | str) -> str:
    """JSON envelope for a failed tool call."""
    if isinstance(error, Exception):
        message = f"{type(error).__name__}: {error}"
    else:
        message = str(error)
    return json.dumps({"status": "error", "message": message}, indent=2)
