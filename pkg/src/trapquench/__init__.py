"""Exact diagonalization and quench dynamics of two trapped bosons plus one impurity."""

__version__ = "0.1.0"
