"""Ranked and partially rank-ordered set sampling simulations for proportion estimation."""

__version__ = "0.1.0"
