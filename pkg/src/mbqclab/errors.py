"""Shared exception types."""

from __future__ import annotations


class ConvergenceError(RuntimeError):
    """An iterative solver ran out of iterations; diagnostics in ``details``."""

    def __init__(self, message: str, details: dict | None = None):
        super().__init__(message)
        self.details = details or {}


class CapacityError(ValueError):
    """Requested problem size exceeds what the chosen method can handle."""
