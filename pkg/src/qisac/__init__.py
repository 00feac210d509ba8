"""Simulator and analytics for entanglement-based integrated sensing and communication."""

from . import channel, estimate, linalg, metrics, protocol, states

__all__ = ["channel", "estimate", "linalg", "metrics", "protocol", "states"]
__version__ = "0.1.0"
