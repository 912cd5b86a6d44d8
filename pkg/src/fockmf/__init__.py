"""Mean-field (semiclassical) limit of bosonic Fock-space dynamics on a finite-dimensional phase space."""

from . import dynamics, fock, symbols, symtensor, wigner

__version__ = "0.1.0"

__all__ = ["dynamics", "fock", "symbols", "symtensor", "wigner"]
