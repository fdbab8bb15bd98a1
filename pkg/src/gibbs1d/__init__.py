"""Exact desk-scale computations for one-dimensional Gibbs measures and their
single-site transformations."""

__version__ = "0.1.0"
