"""Finite-scale certificates for topological amenability of group actions."""

__version__ = "0.1.0"
