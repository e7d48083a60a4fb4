"""Class distance weighted cross-entropy (CDW-CE) and ordinal-loss evaluation harness."""

from ._backend import available_backends, current_backend, use_backend
from .losses import LossKind, LossSpec

__version__ = "0.1.0"

__all__ = ["LossKind", "LossSpec", "available_backends", "current_backend", "use_backend"]
