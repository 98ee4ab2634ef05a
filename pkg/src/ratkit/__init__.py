"""Retrieval-augmented thought revision pipeline and evaluation stack."""

__version__ = "0.1.0"
