"""Switching-sequence design and path estimation for TDM MIMO channel sounders."""

from .arrays import Eadf, steering, steering_derivative, synthesize_uca, synthesize_ula
from .sounding import Path, PathSet, Sounder, SoundingConfig, signal

__version__ = "0.1.0"

__all__ = [
    "Eadf",
    "Path",
    "PathSet",
    "Sounder",
    "SoundingConfig",
    "signal",
    "steering",
    "steering_derivative",
    "synthesize_uca",
    "synthesize_ula",
]
