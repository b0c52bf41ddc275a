"""Quantum-optical simulation of intense laser-matter interaction."""

__version__ = "0.1.0"
