"""Numerical toolkit for toric Poincaré–Einstein metrics and their degenerations."""

__version__ = "0.1.0"

from .core.polyfam import family_factory, metric_at, params_from_json
from .utils.config import Config

__all__ = ["Config", "family_factory", "metric_at", "params_from_json"]
