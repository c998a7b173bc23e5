"""Discrete and continuum machinery for random quadrangulations with holes:
exact counting and sampling of labeled structures, metric gluing, and
grid-based scaling experiments."""

__version__ = "0.1.0"
