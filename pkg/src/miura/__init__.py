"""Miura-ori inverse design package."""
__version__ = "0.1.0"
__all__ = ["core", "geometry", "optimization", "unfold", "data", "orchestration", "monitoring", "tracking"]
