"""Dyadic representation of bi-parameter singular integrals on finite grids."""
