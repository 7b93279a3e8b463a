"""Lagrangian mechanics on Lie algebroids in local coordinates."""

__version__ = "0.1.0"
