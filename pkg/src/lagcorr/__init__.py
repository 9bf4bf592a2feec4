"""Combinatorial Floer complexes of curves under Lagrangian correspondences, and jets of
Lagrangian immersions into products of surfaces."""

__version__ = "0.1.0"
