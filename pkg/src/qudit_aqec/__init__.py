"""Noise-adapted qudit codes for amplitude damping."""
__version__ = "0.1.0"
