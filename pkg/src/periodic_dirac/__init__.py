"""Truncated Fourier-basis toolkit for periodic magnetic Dirac operators."""

from .clifford import CliffordSystem, build_clifford
from .errors import DegenerateLatticeError, IncompleteEnumerationError, PreconditionError
from .lattice import Lattice

__version__ = "0.1.0"
