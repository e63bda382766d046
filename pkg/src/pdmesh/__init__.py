"""Staggered primal-dual mesh generation and optimisation."""

__version__ = "0.1.0"
