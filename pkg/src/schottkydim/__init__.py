"""Complex hyperbolic boundary geometry and dimension estimates for Schottky groups."""

__version__ = "0.1.0"
