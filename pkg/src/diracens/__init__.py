"""Dirac ensembles of type (1,0) solved as bi-tracial matrix models."""
__version__ = "0.1.0"
