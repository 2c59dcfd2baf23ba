"""Heavy-tailed last-passage percolation: simulation library and experiment drivers."""

__version__ = "0.1.0"
