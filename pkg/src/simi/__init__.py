"""Monte Carlo laboratory for the spatial infection model with host immunity."""

__version__ = "0.1.0"
