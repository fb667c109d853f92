"""Symmetry-projected measurement bases for fermionic RDM tomography."""

from spt.pauli import PauliString, PauliSum, DimensionError
from spt.fermion import FermionOperator, LadderTerm, RdmElementSpec, SpinOrbital
from spt.encode import EncodingSpec

__all__ = [
    "DimensionError",
    "EncodingSpec",
    "FermionOperator",
    "LadderTerm",
    "PauliString",
    "PauliSum",
    "RdmElementSpec",
    "SpinOrbital",
]

__version__ = "0.1.0"
