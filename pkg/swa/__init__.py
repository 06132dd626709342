__version__ = "0.1.0"

from .auditor import Auditor  # noqa: E402

__all__ = [
    "auditor",
    "cli",
    "config",
    "exceptions",
    "extraction",
    "instance",
    "meta",
    "metrics",
    "plfit",
    "report",
    "spectral",
    "storage",
    "utils",
]
