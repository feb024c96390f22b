"""Numerical laboratory for Hamiltonian stationary Lagrangian surfaces,
rho-harmonic surfaces in H and O, and superharmonic maps."""

__version__ = "0.1.0"
