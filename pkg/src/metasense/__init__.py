"""Lumped metamaterial sensor toolkit: bandgap design, transmittance,
structure-to-sensor simulation and surrogate-based inverse design."""

__version__ = "0.1.0"
