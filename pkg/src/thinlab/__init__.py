"""Computational laboratory for locally thinned Bernoulli lattice fields."""

__version__ = "0.1.0"
