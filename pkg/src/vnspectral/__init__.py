"""Spectral theory of operators over finite von Neumann algebras, at desk scale."""

__version__ = "0.1.0"
