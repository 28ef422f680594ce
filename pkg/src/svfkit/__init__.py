"""Singular value pressure, affinity dimension and equilibrium states for matrix tuples."""
__version__ = "0.1.0"
