"""Approximation algorithms for the geometric knapsack problem."""

from .core import Instance, Item, Mode, Packing, parse_eps, verify_packing

__version__ = "0.1.0"

__all__ = ["Instance", "Item", "Mode", "Packing", "parse_eps", "verify_packing"]
