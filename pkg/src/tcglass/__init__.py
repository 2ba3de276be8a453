"""Toric code under wavefunction and Hamiltonian disorder: exact small-system tools."""

from .lattice import LatticeError, TorusLattice, build_torus, levin_wen_regions

__all__ = ["LatticeError", "TorusLattice", "build_torus", "levin_wen_regions"]
