"""Constrained-Hamiltonian analysis and lattice simulation of the Dirac field."""

__version__ = "0.1.0"
