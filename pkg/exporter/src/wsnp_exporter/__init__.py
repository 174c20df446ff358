"""Thin training-loop hook that exports weight snapshots in the WSNP format."""

from .session import (
    EmptySessionError,
    ExportError,
    ExportSession,
    NonFiniteParameterError,
)

__version__ = "0.1.0"

__all__ = [
    "EmptySessionError",
    "ExportError",
    "ExportSession",
    "NonFiniteParameterError",
    "__version__",
]
