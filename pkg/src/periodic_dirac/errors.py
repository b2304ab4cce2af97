"""Exception types raised across the package."""


class PreconditionError(ValueError):
    """An input lies outside the documented parameter range."""


class DegenerateLatticeError(PreconditionError):
    """The supplied lattice basis is (numerically) singular."""


class IncompleteEnumerationError(RuntimeError):
    """A search box is provably too small for the requested index set."""


class AliasingWarning(UserWarning):
    """Fourier content reaches the Nyquist boundary of a sampling grid."""
