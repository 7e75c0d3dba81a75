"""Pseudospectral simulator for the semi-relativistic Schroedinger-Poisson system with mixed states."""

__version__ = "0.1.0"
