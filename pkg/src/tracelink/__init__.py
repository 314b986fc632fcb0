"""Probabilistic trace link recovery between software artifacts."""

__version__ = "0.1.0"
