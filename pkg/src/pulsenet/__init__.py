"""Event-driven simulator and verification toolkit for cooperative
pulse-coupled networks."""

from . import analysis, config, engine, model, oracle

__all__ = ["analysis", "config", "engine", "model", "oracle"]
__version__ = "0.1.0"
