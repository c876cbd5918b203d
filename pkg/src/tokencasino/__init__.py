"""tokencasino: an event-sourced token casino with lending and provably
fair games, plus an HTTP API and a Monte-Carlo analysis CLI."""

__version__ = "0.1.0"

from .engine import Platform
from .errors import PlatformError
from .fairness import derive_uniform
from .ledger import Ledger
from .sim import SimReport, simulate, solvency

__all__ = [
    "Platform",
    "PlatformError",
    "Ledger",
    "SimReport",
    "simulate",
    "solvency",
    "derive_uniform",
    "__version__",
]
